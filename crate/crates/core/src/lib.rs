//! Numerical toolkit for the vector-state Jensen relation between Hermitian
//! matrices and the antisymmetry results built on it.
//!
//! * [`hermitian`]: spectral decomposition, functional calculus, spectral
//!   projections, Loewner gaps and compressions.
//! * [`scalar`]: scalar function descriptors with analytic derivatives.
//! * [`jensen`]: the relation `⟨h(A)ξ,ξ⟩ ≤ h(⟨Bξ,ξ⟩)` decided by the
//!   tangent-line family and by a unit-sphere descent oracle.
//! * [`antisymmetry`]: the projection-peeling equality certificate and the
//!   violation search for `X ≠ Y`.
//! * [`sandwich`]: the two-sided composed hypothesis, its explicit constants
//!   and the discretization audit.
//! * [`fuzz`]: seeded randomized campaigns over the above.

pub mod antisymmetry;
pub mod error;
pub mod fuzz;
pub mod hermitian;
pub mod jensen;
pub mod random;
pub mod report;
pub mod sandwich;
pub mod scalar;

pub use error::{Error, Result};
pub use hermitian::{HermitianMatrix, Projection, SpectralDecomposition};
pub use jensen::{Direction, RelationOptions, RelationVerdict};
pub use scalar::ScalarFunction;
