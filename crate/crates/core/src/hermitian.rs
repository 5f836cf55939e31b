//! Finite-dimensional self-adjoint linear algebra.
//!
//! Everything downstream works on [`HermitianMatrix`]: spectral decomposition,
//! functional calculus `f(M) = V diag(f(λ)) V*`, spectral projections
//! `χ_[a,b)(M)`, Loewner-order gaps and compressions onto the range of a
//! projection.

use std::path::Path;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::ScalarFunction;

pub type C64 = nalgebra::Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Relative tolerance for Loewner comparisons: `M ≥ 0` iff `λ_min(M) ≥ -τ`.
pub const TAU_PSD_REL: f64 = 1e-9;
/// Relative distance at which an eigenvalue counts as sitting on an interval endpoint.
pub const TAU_CLUSTER_REL: f64 = 1e-9;
/// Absolute slack when checking a spectrum against a function domain.
pub const TAU_DOMAIN: f64 = 1e-12;
/// Tolerance on projection identities (`P² = P`, trace vs rank, projection equality).
pub const TAU_PROJ: f64 = 1e-9;

const EIGEN_EPS: f64 = 1e-15;
const EIGEN_MAX_ITER: usize = 10_000;

/// Operator (spectral) norm of an arbitrary square or rectangular matrix.
pub fn op_norm(m: &CMatrix) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .fold(0.0_f64, |acc, &s| acc.max(s))
}

/// A dense self-adjoint matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    m: CMatrix,
}

/// On-disk matrix format: `{"dim": n, "entries": [[re, im], ...]}`, row-major.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixFile {
    pub dim: usize,
    pub entries: Vec<[f64; 2]>,
}

impl HermitianMatrix {
    /// Validates Hermiticity exactly (no tolerance).
    pub fn from_matrix(m: CMatrix) -> Result<Self> {
        if m.nrows() == 0 {
            return Err(Error::EmptyMatrix);
        }
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                left: m.nrows(),
                right: m.ncols(),
            });
        }
        let n = m.nrows();
        for i in 0..n {
            for j in i..n {
                if m[(i, j)] != m[(j, i)].conj() {
                    return Err(Error::NotHermitian { row: i, col: j });
                }
            }
        }
        Ok(Self { m })
    }

    /// Row-major complex entries, validated exactly.
    pub fn from_entries(dim: usize, entries: &[C64]) -> Result<Self> {
        if dim == 0 {
            return Err(Error::EmptyMatrix);
        }
        if entries.len() != dim * dim {
            return Err(Error::EntryCount {
                dim,
                expected: dim * dim,
                found: entries.len(),
            });
        }
        Self::from_matrix(CMatrix::from_row_slice(dim, dim, entries))
    }

    /// Row-major real symmetric entries, validated exactly.
    pub fn from_real(dim: usize, entries: &[f64]) -> Result<Self> {
        let c: Vec<C64> = entries.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::from_entries(dim, &c)
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        assert!(!diag.is_empty(), "diagonal must be non-empty");
        let d = CVector::from_iterator(diag.len(), diag.iter().map(|&x| C64::new(x, 0.0)));
        Self {
            m: CMatrix::from_diagonal(&d),
        }
    }

    pub fn identity(dim: usize) -> Self {
        assert!(dim > 0);
        Self {
            m: CMatrix::identity(dim, dim),
        }
    }

    /// Projects an internally produced matrix onto the Hermitian matrices,
    /// `(M + M*)/2`. The result is exactly Hermitian entry by entry.
    pub fn symmetrized(m: &CMatrix) -> Self {
        assert!(
            m.nrows() == m.ncols() && m.nrows() > 0,
            "square, non-empty matrix required"
        );
        let n = m.nrows();
        let mut out = CMatrix::zeros(n, n);
        for i in 0..n {
            out[(i, i)] = C64::new(m[(i, i)].re, 0.0);
            for j in (i + 1)..n {
                let avg = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
                out[(i, j)] = avg;
                out[(j, i)] = avg.conj();
            }
        }
        Self { m: out }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.m[(row, col)]
    }

    /// `⟨Mξ, ξ⟩`, real for Hermitian `M`.
    pub fn quadratic_form(&self, xi: &CVector) -> f64 {
        xi.dotc(&(&self.m * xi)).re
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::symmetrized(&(&self.m + &other.m))
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::symmetrized(&(&self.m - &other.m))
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::symmetrized(&(&self.m * C64::new(s, 0.0)))
    }

    /// `M + s·I`.
    pub fn shift(&self, s: f64) -> Self {
        let mut m = self.m.clone();
        for i in 0..self.dim() {
            m[(i, i)] += C64::new(s, 0.0);
        }
        Self::symmetrized(&m)
    }

    /// `s·M + t·I`.
    pub fn affine(&self, s: f64, t: f64) -> Self {
        self.scale(s).shift(t)
    }

    /// Conjugation `U M U*`.
    pub fn conjugate_by(&self, u: &CMatrix) -> Self {
        Self::symmetrized(&(u * &self.m * u.adjoint()))
    }

    /// Frobenius-based condition estimate used in diagnostics only.
    fn condition_estimate(&self) -> f64 {
        match self.m.clone().try_inverse() {
            Some(inv) => self.m.norm() * inv.norm(),
            None => f64::INFINITY,
        }
    }

    pub fn spectral(&self) -> Result<SpectralDecomposition> {
        let eig = SymmetricEigen::try_new(self.m.clone(), EIGEN_EPS, EIGEN_MAX_ITER).ok_or_else(
            || Error::Decomposition {
                dim: self.dim(),
                condition: self.condition_estimate(),
            },
        )?;
        let n = self.dim();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        if eigenvalues.iter().any(|x| !x.is_finite()) {
            return Err(Error::Decomposition {
                dim: n,
                condition: self.condition_estimate(),
            });
        }
        let mut eigenvectors = CMatrix::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            eigenvectors.set_column(dst, &eig.eigenvectors.column(src));
        }
        Ok(SpectralDecomposition {
            eigenvalues,
            eigenvectors,
        })
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let mut ev: Vec<f64> = self.m.symmetric_eigenvalues().iter().copied().collect();
        if ev.iter().any(|x| !x.is_finite()) {
            return Err(Error::Decomposition {
                dim: self.dim(),
                condition: self.condition_estimate(),
            });
        }
        ev.sort_by(f64::total_cmp);
        Ok(ev)
    }

    /// Operator norm, `max |λ|`.
    pub fn norm(&self) -> f64 {
        match self.eigenvalues() {
            Ok(ev) => ev.iter().fold(0.0_f64, |acc, &x| acc.max(x.abs())),
            Err(_) => op_norm(&self.m),
        }
    }

    /// `λ_min(M)`; `M ≥ 0` within tolerance means `psd_gap(M) ≥ -tau_psd(M)`.
    pub fn psd_gap(&self) -> Result<f64> {
        Ok(self.eigenvalues()?[0])
    }

    pub fn tau_psd(&self) -> f64 {
        TAU_PSD_REL * (1.0 + self.norm())
    }

    pub fn tau_cluster(&self) -> f64 {
        TAU_CLUSTER_REL * (1.0 + self.norm())
    }

    pub fn is_psd(&self) -> Result<bool> {
        Ok(self.psd_gap()? >= -self.tau_psd())
    }

    pub fn is_positive_definite(&self) -> Result<bool> {
        Ok(self.psd_gap()? > self.tau_psd())
    }

    /// Functional calculus `f(M)`. Eigenvalues within [`TAU_DOMAIN`] of a
    /// closed domain endpoint are clamped onto it.
    pub fn apply_function(&self, f: &ScalarFunction) -> Result<Self> {
        let sd = self.spectral()?;
        let domain = f.domain();
        let mut values = Vec::with_capacity(sd.eigenvalues.len());
        for &lam in &sd.eigenvalues {
            let t = domain.snap(lam, TAU_DOMAIN).ok_or_else(|| Error::Domain {
                function: f.name().to_string(),
                value: lam,
                domain: domain.to_string(),
            })?;
            values.push(f.eval(t));
        }
        Ok(sd.rebuild(&values))
    }

    /// Applies `g` to the spectrum with no domain bookkeeping.
    pub fn map_spectrum(&self, g: impl Fn(f64) -> f64) -> Result<Self> {
        let sd = self.spectral()?;
        let values: Vec<f64> = sd.eigenvalues.iter().map(|&x| g(x)).collect();
        Ok(sd.rebuild(&values))
    }

    /// Inverse through the spectrum; fails unless `M` is positive definite.
    pub fn inverse_pd(&self) -> Result<Self> {
        let sd = self.spectral()?;
        let gap = sd.eigenvalues[0];
        if gap <= self.tau_psd() {
            return Err(Error::NotPositiveDefinite {
                min_eigenvalue: gap,
            });
        }
        let values: Vec<f64> = sd.eigenvalues.iter().map(|&x| 1.0 / x).collect();
        Ok(sd.rebuild(&values))
    }

    /// `χ_[a,b)(M)`, strict half-open convention on the computed eigenvalues.
    pub fn spectral_projection(&self, a: f64, b: f64) -> Result<IntervalProjection> {
        let sd = self.spectral()?;
        let tau = self.tau_cluster();
        let n = self.dim();
        let mut cols = Vec::new();
        let mut near_boundary = Vec::new();
        for (k, &lam) in sd.eigenvalues.iter().enumerate() {
            if (lam - a).abs() <= tau || (lam - b).abs() <= tau {
                near_boundary.push(lam);
            }
            if lam >= a && lam < b {
                cols.push(k);
            }
        }
        let mut basis = CMatrix::zeros(n, cols.len());
        for (dst, &k) in cols.iter().enumerate() {
            basis.set_column(dst, &sd.eigenvectors.column(k));
        }
        Ok(IntervalProjection {
            projection: Projection::from_basis(basis),
            near_boundary,
        })
    }

    /// `PMP` written in the range basis of `P` (a `rank × rank` matrix).
    pub fn compress(&self, p: &Projection) -> Result<Self> {
        self.check_dim(p.dim())?;
        if p.rank() == 0 {
            return Err(Error::EmptyProjection);
        }
        let v = p.basis();
        Ok(Self::symmetrized(&(v.adjoint() * &self.m * v)))
    }

    /// `(P M⁻¹ P)⁻¹` on the range of `P`.
    pub fn compressed_inverse(&self, p: &Projection) -> Result<Self> {
        self.check_dim(p.dim())?;
        let inv = self.inverse_pd()?;
        let c = inv.compress(p)?;
        c.inverse_pd()
    }

    /// Norm of `(P M⁻¹ P)⁻¹ − [PMP − PMP⊥ (P⊥MP⊥)⁻¹ P⊥MP]` on the range of `P`.
    pub fn schur_complement_identity_residual(&self, p: &Projection) -> Result<f64> {
        self.check_dim(p.dim())?;
        if p.rank() == 0 || p.rank() >= self.dim() {
            return Err(Error::ProjectionRank {
                rank: p.rank(),
                dim: self.dim(),
            });
        }
        let lhs = self.compressed_inverse(p)?;
        let q = p.complement()?;
        let v = p.basis();
        let w = q.basis();
        let pmp = v.adjoint() * &self.m * v;
        let pmq = v.adjoint() * &self.m * w;
        let qmq = Self::symmetrized(&(w.adjoint() * &self.m * w)).inverse_pd()?;
        let rhs = &pmp - &pmq * qmq.matrix() * pmq.adjoint();
        Ok(op_norm(&(lhs.matrix() - rhs)))
    }

    fn check_dim(&self, other: usize) -> Result<()> {
        if self.dim() != other {
            return Err(Error::DimensionMismatch {
                left: self.dim(),
                right: other,
            });
        }
        Ok(())
    }

    pub fn to_file(&self) -> MatrixFile {
        MatrixFile {
            dim: self.dim(),
            entries: (0..self.dim())
                .flat_map(|i| (0..self.dim()).map(move |j| (i, j)))
                .map(|(i, j)| [self.m[(i, j)].re, self.m[(i, j)].im])
                .collect(),
        }
    }

    pub fn from_file(file: &MatrixFile) -> Result<Self> {
        let entries: Vec<C64> = file.entries.iter().map(|e| C64::new(e[0], e[1])).collect();
        Self::from_entries(file.dim, &entries)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let file: MatrixFile = serde_json::from_str(s)?;
        Self::from_file(&file)
    }

    pub fn to_json_string(&self) -> String {
        crate::report::to_json(&self.to_file())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json_string())?;
        Ok(())
    }
}

/// Eigenvalues ascending with an orthonormal eigenvector frame in the same order.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl SpectralDecomposition {
    /// `V diag(values) V*`, symmetrized.
    pub fn rebuild(&self, values: &[f64]) -> HermitianMatrix {
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for (k, &x) in values.iter().enumerate() {
            scaled.column_mut(k).scale_mut(x);
        }
        HermitianMatrix::symmetrized(&(scaled * v.adjoint()))
    }

    pub fn reconstruct(&self) -> HermitianMatrix {
        self.rebuild(&self.eigenvalues)
    }

    /// `‖V*V − I‖_max`.
    pub fn orthogonality_error(&self) -> f64 {
        let n = self.eigenvectors.ncols();
        let g = self.eigenvectors.adjoint() * &self.eigenvectors - CMatrix::identity(n, n);
        g.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
    }

    pub fn reconstruction_error(&self, m: &HermitianMatrix) -> f64 {
        op_norm(&(self.reconstruct().matrix() - m.matrix()))
    }

    /// Projection onto the eigenvectors with the given indices.
    pub fn eigenprojection(&self, indices: &[usize]) -> Projection {
        let n = self.eigenvectors.nrows();
        let mut basis = CMatrix::zeros(n, indices.len());
        for (dst, &k) in indices.iter().enumerate() {
            basis.set_column(dst, &self.eigenvectors.column(k));
        }
        Projection::from_basis(basis)
    }

    pub fn eigenvector(&self, k: usize) -> CVector {
        self.eigenvectors.column(k).into_owned()
    }
}

/// An orthogonal projection together with an orthonormal basis of its range.
#[derive(Debug, Clone)]
pub struct Projection {
    matrix: CMatrix,
    basis: CMatrix,
}

impl Projection {
    /// `basis` must have orthonormal columns; `P = V V*`.
    pub fn from_basis(basis: CMatrix) -> Self {
        let n = basis.nrows();
        let matrix = if basis.ncols() == 0 {
            CMatrix::zeros(n, n)
        } else {
            HermitianMatrix::symmetrized(&(&basis * basis.adjoint())).into_matrix()
        };
        Self { matrix, basis }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_basis(CMatrix::identity(dim, dim))
    }

    /// Projection onto the span of standard basis vectors `e_k`, `k ∈ coords`.
    pub fn coordinate(dim: usize, coords: &[usize]) -> Self {
        let mut basis = CMatrix::zeros(dim, coords.len());
        for (col, &k) in coords.iter().enumerate() {
            basis[(k, col)] = C64::new(1.0, 0.0);
        }
        Self::from_basis(basis)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    pub fn to_hermitian(&self) -> HermitianMatrix {
        HermitianMatrix::symmetrized(&self.matrix)
    }

    /// `1 − P`.
    pub fn complement(&self) -> Result<Self> {
        let n = self.dim();
        let q = HermitianMatrix::symmetrized(&(CMatrix::identity(n, n) - &self.matrix));
        let sd = q.spectral()?;
        let idx: Vec<usize> = (0..n).filter(|&k| sd.eigenvalues[k] > 0.5).collect();
        Ok(sd.eigenprojection(&idx))
    }

    /// `‖P² − P‖`.
    pub fn idempotency_error(&self) -> f64 {
        op_norm(&(&self.matrix * &self.matrix - &self.matrix))
    }

    /// `|trace(P) − rank|`.
    pub fn trace_error(&self) -> f64 {
        (self.matrix.trace().re - self.rank() as f64).abs()
    }

    /// Embeds a projection given on the range basis `outer` back into the ambient space.
    pub fn lift(&self, outer: &CMatrix) -> Self {
        Self::from_basis(outer * &self.basis)
    }
}

/// Result of [`HermitianMatrix::spectral_projection`]: the projection and any
/// eigenvalues found within `τ_cluster` of an endpoint.
#[derive(Debug, Clone)]
pub struct IntervalProjection {
    pub projection: Projection,
    pub near_boundary: Vec<f64>,
}

impl IntervalProjection {
    pub fn is_near_boundary(&self) -> bool {
        !self.near_boundary.is_empty()
    }
}
