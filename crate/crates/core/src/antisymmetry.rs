//! Equality certificate for the dual Jensen relations in finite dimension.
//!
//! If `⟨F(X)ξ,ξ⟩ ≥ F(⟨Yξ,ξ⟩)` and `⟨F(Y)ξ,ξ⟩ ≥ F(⟨Xξ,ξ⟩)` for every unit `ξ`
//! with `F` strictly monotone and convex, then `X = Y`. [`decide_equal`]
//! verifies the two relations and then replays the peeling argument: the top
//! eigenspace `Q` of `F(Y)` must carry `‖F(X)‖ = ‖F(Y)‖`, `QF(X)Q = ‖F(X)‖Q`
//! and hence `XQ = YQ`; both matrices are then restricted to `(1 − Q)` and the
//! step repeats. The concave-≤ form is handled as `F = −f`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hermitian::{
    op_norm, CMatrix, CVector, HermitianMatrix, MatrixFile, Projection, TAU_DOMAIN,
};
use crate::jensen::{
    self, check_relation_sphere, check_relation_tangent, Direction, Method, RelationOptions,
    RelationProblem, RelationVerdict,
};
use crate::scalar::ScalarFunction;

#[derive(Debug, Clone, Copy)]
pub struct PeelOptions {
    /// `τ_eq = tau_eq_rel · (1 + ‖X‖ + ‖Y‖)`
    pub tau_eq_rel: f64,
    /// `τ_norm = tau_norm_rel · (1 + ‖F(X)‖)`
    pub tau_norm_rel: f64,
    pub relation: RelationOptions,
}

impl Default for PeelOptions {
    fn default() -> Self {
        Self {
            tau_eq_rel: 1e-7,
            tau_norm_rel: 1e-8,
            relation: RelationOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum StepStatus {
    Ok,
    NormMismatch,
    ToleranceExceeded,
}

/// One peeling level. Norms are top eigenvalues of the unshifted `F` on the
/// current subspace; `q` is given in the coordinates of the matrices passed
/// to [`peel_once`] (ambient coordinates inside a [`PeelingTrace`]).
#[derive(Debug, Clone, Serialize)]
pub struct PeelingStep {
    pub level: usize,
    pub subspace_dim: usize,
    pub rank: usize,
    #[serde(serialize_with = "serialize_projection")]
    pub q: Projection,
    pub shift: f64,
    pub norms: (f64, f64),
    pub norm_gap: f64,
    pub tau_norm: f64,
    pub commutation_residual: f64,
    pub factor_residual: f64,
    pub equality_residual: f64,
    pub status: StepStatus,
    #[serde(skip)]
    top_x: CVector,
    #[serde(skip)]
    top_y: CVector,
}

fn serialize_projection<S: serde::Serializer>(
    p: &Projection,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    let n = p.dim();
    let m = p.matrix();
    MatrixFile {
        dim: n,
        entries: (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| [m[(i, j)].re, m[(i, j)].im])
            .collect(),
    }
    .serialize(s)
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Conclusion {
    Equal,
    PremiseViolated { witness: Box<RelationVerdict> },
    ToleranceExceeded { max_residual: f64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct PeelingTrace {
    pub function: String,
    pub direction: Direction,
    pub shift: f64,
    pub steps: Vec<PeelingStep>,
    pub conclusion: Conclusion,
    /// `‖X − Y‖`, computed directly.
    pub difference_norm: f64,
    pub tau_eq: f64,
}

impl PeelingTrace {
    pub fn is_equal(&self) -> bool {
        matches!(self.conclusion, Conclusion::Equal)
    }
}

/// Convex form of the relation: `F = f` for convex-≥, `F = −f` for concave-≤.
fn convex_form(f: &ScalarFunction, direction: Direction) -> Result<ScalarFunction> {
    Ok(jensen::normalize(f, direction)?.negate())
}

/// `c = max(0, −min F) + 1` over the joint spectral range of `X` and `Y`.
/// `F` is monotone, so its minimum sits at an endpoint.
pub fn positivity_shift(
    f: &ScalarFunction,
    x: &HermitianMatrix,
    y: &HermitianMatrix,
) -> Result<f64> {
    let ex = x.eigenvalues()?;
    let ey = y.eigenvalues()?;
    let lo = ex[0].min(ey[0]);
    let hi = ex[ex.len() - 1].max(ey[ey.len() - 1]);
    let d = f.domain();
    let snap = |t: f64| {
        d.snap(t, TAU_DOMAIN).ok_or_else(|| Error::Domain {
            function: f.name().to_string(),
            value: t,
            domain: d.to_string(),
        })
    };
    let fmin = f.eval(snap(lo)?).min(f.eval(snap(hi)?));
    Ok((-fmin).max(0.0) + 1.0)
}

fn top_cluster(values: &[f64], tau: f64) -> Vec<usize> {
    let top = values[values.len() - 1];
    (0..values.len())
        .filter(|&k| values[k] >= top - tau)
        .collect()
}

/// One peeling level for the convex form `F` (not shifted; the positivity
/// shift is computed here from the spectra of `X` and `Y`).
pub fn peel_once(
    f: &ScalarFunction,
    x: &HermitianMatrix,
    y: &HermitianMatrix,
    opts: &PeelOptions,
) -> Result<PeelingStep> {
    let shift = positivity_shift(f, x, y)?;
    peel_level(f, shift, x, y, 0, opts)
}

fn peel_level(
    f: &ScalarFunction,
    shift: f64,
    x: &HermitianMatrix,
    y: &HermitianMatrix,
    level: usize,
    opts: &PeelOptions,
) -> Result<PeelingStep> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            left: x.dim(),
            right: y.dim(),
        });
    }
    let n = x.dim();
    let fx = x.apply_function(f)?.shift(shift);
    let fy = y.apply_function(f)?.shift(shift);
    let sx = fx.spectral()?;
    let sy = fy.spectral()?;
    let norm_x = sx.eigenvalues[n - 1];
    let norm_y = sy.eigenvalues[n - 1];
    let q = sy.eigenprojection(&top_cluster(&sy.eigenvalues, fy.tau_cluster()));
    let v = q.basis();

    let tau_norm = opts.tau_norm_rel * (1.0 + norm_x.abs());
    let norm_gap = (norm_x - norm_y).abs();

    let commutation = q.matrix() * fx.matrix() - fx.matrix() * q.matrix();
    let slack = fx.map_spectrum(|t| (norm_x - t).max(0.0).sqrt())?;
    let factor_residual = op_norm(&(slack.matrix() * v));
    let equality_residual = op_norm(&((x.matrix() - y.matrix()) * v));

    let tau_eq = opts.tau_eq_rel * (1.0 + x.norm() + y.norm());
    let tau_factor = tau_norm.sqrt();
    let commutation_residual = op_norm(&commutation);
    let status = if norm_gap > tau_norm {
        StepStatus::NormMismatch
    } else if equality_residual > tau_eq
        || factor_residual > tau_factor
        || commutation_residual > tau_factor
    {
        StepStatus::ToleranceExceeded
    } else {
        StepStatus::Ok
    };
    Ok(PeelingStep {
        level,
        subspace_dim: n,
        rank: q.rank(),
        q,
        shift,
        norms: (norm_x - shift, norm_y - shift),
        norm_gap,
        tau_norm,
        commutation_residual,
        factor_residual,
        equality_residual,
        status,
        top_x: sx.eigenvector(n - 1),
        top_y: sy.eigenvector(n - 1),
    })
}

/// Witness for a top-norm mismatch: if `‖F(Y)‖ > ‖F(X)‖` the top vector of
/// `F(Y)` breaks the `(X, Y)` relation, otherwise the top vector of `F(X)`
/// breaks `(Y, X)`.
fn mismatch_witness(
    h: &ScalarFunction,
    x: &HermitianMatrix,
    y: &HermitianMatrix,
    step: &PeelingStep,
    basis: &CMatrix,
    opts: &PeelOptions,
) -> Result<Option<RelationVerdict>> {
    let (a, b, local) = if step.norms.1 > step.norms.0 {
        (x, y, &step.top_y)
    } else {
        (y, x, &step.top_x)
    };
    let problem = RelationProblem::new(h, a, b)?;
    let start = basis * local;
    let (polished, val) = problem.descend(&start, opts.relation.max_iter, opts.relation.grad_tol);
    let best = if val < problem.phi(&start) {
        polished
    } else {
        start
    };
    let w = problem.witness(&best);
    if w.violation() <= problem.tolerance() {
        return Ok(None);
    }
    Ok(Some(RelationVerdict {
        holds: false,
        margin: -w.violation(),
        tolerance: problem.tolerance(),
        lambda_star: None,
        witness: Some(w),
        method: Method::Sphere,
        restarts: Some(1),
        seed: opts.relation.seed,
    }))
}

/// Premise check followed by peeling; a total decision procedure.
pub fn decide_equal(
    f: &ScalarFunction,
    x: &HermitianMatrix,
    y: &HermitianMatrix,
    direction: Direction,
    opts: &PeelOptions,
) -> Result<PeelingTrace> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            left: x.dim(),
            right: y.dim(),
        });
    }
    let h = jensen::normalize(f, direction)?;
    let big_f = convex_form(f, direction)?;
    let difference_norm = x.sub(y).norm();
    let tau_eq = opts.tau_eq_rel * (1.0 + x.norm() + y.norm());
    let shift = positivity_shift(&big_f, x, y)?;
    let mut trace = PeelingTrace {
        function: f.name().to_string(),
        direction,
        shift,
        steps: Vec::new(),
        conclusion: Conclusion::Equal,
        difference_norm,
        tau_eq,
    };

    let (xy, yx) = jensen::dual_relation_check(f, x, y, direction, &opts.relation)?;
    for verdict in [xy, yx] {
        if !verdict.holds {
            trace.conclusion = Conclusion::PremiseViolated {
                witness: Box::new(verdict),
            };
            return Ok(trace);
        }
    }

    let n = x.dim();
    let mut basis = CMatrix::identity(n, n);
    let mut xs = x.clone();
    let mut ys = y.clone();
    let mut max_residual = 0.0_f64;
    for level in 0..n {
        let mut step = peel_level(&big_f, shift, &xs, &ys, level, opts)?;
        max_residual = max_residual.max(step.equality_residual);
        let local_q = step.q.clone();
        step.q = local_q.lift(&basis);
        let status = step.status;
        let remaining = xs.dim() - local_q.rank();
        match status {
            StepStatus::NormMismatch => {
                let witness = mismatch_witness(&h, x, y, &step, &basis, opts)?;
                trace.steps.push(step);
                trace.conclusion = match witness {
                    Some(w) => Conclusion::PremiseViolated {
                        witness: Box::new(w),
                    },
                    None => Conclusion::ToleranceExceeded { max_residual },
                };
                return Ok(trace);
            }
            StepStatus::ToleranceExceeded => {
                trace.steps.push(step);
                trace.conclusion = Conclusion::ToleranceExceeded { max_residual };
                return Ok(trace);
            }
            StepStatus::Ok => trace.steps.push(step),
        }
        if remaining == 0 {
            break;
        }
        let complement = local_q.complement()?;
        let w = complement.basis();
        xs = HermitianMatrix::symmetrized(&(w.adjoint() * xs.matrix() * w));
        ys = HermitianMatrix::symmetrized(&(w.adjoint() * ys.matrix() * w));
        basis = &basis * w;
    }
    trace.conclusion = if difference_norm <= tau_eq {
        Conclusion::Equal
    } else {
        Conclusion::ToleranceExceeded {
            max_residual: max_residual.max(difference_norm),
        }
    };
    Ok(trace)
}

/// Searches both orderings for a violated relation: tangent method first,
/// then the sphere oracle with `budget` restarts. `None` means nothing was
/// found within the budget, not that the relations hold.
pub fn find_violation(
    f: &ScalarFunction,
    x: &HermitianMatrix,
    y: &HermitianMatrix,
    direction: Direction,
    seed: u64,
    budget: usize,
) -> Result<Option<RelationVerdict>> {
    let h = jensen::normalize(f, direction)?;
    let opts = RelationOptions {
        seed,
        restarts: budget,
        ..RelationOptions::default()
    };
    for (a, b) in [(x, y), (y, x)] {
        let v = check_relation_tangent(&h, a, b, &opts)?;
        if !v.holds {
            return Ok(Some(v));
        }
    }
    for (a, b) in [(x, y), (y, x)] {
        let v = check_relation_sphere(&h, a, b, &opts)?;
        if !v.holds {
            return Ok(Some(v));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;

    #[test]
    fn peel_equal_diagonals() {
        let x = HermitianMatrix::from_diagonal(&[1.0, 2.0, 3.0]);
        let s = peel_once(&ScalarFunction::square(), &x, &x, &PeelOptions::default()).unwrap();
        assert_eq!(s.rank, 1);
        assert!((s.q.matrix()[(2, 2)].re - 1.0).abs() < 1e-15);
        assert_eq!(s.norms, (9.0, 9.0));
        assert_eq!(s.equality_residual, 0.0);
        assert!(s.commutation_residual < 1e-14);
        assert_eq!(s.status, StepStatus::Ok);
    }

    #[test]
    fn peel_two_by_two() {
        let x = HermitianMatrix::from_real(2, &[2.0, 1.0, 1.0, 2.0]).unwrap();
        let s = peel_once(&ScalarFunction::square(), &x, &x, &PeelOptions::default()).unwrap();
        assert_eq!(s.rank, 1);
        let q = s.q.matrix();
        for (i, j) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            assert!((q[(i, j)].re - 0.5).abs() < 1e-12);
        }
        assert!(s.equality_residual <= 1e-12 && s.commutation_residual <= 1e-12);
        assert!((s.norms.0 - 9.0).abs() < 1e-12);
    }

    #[test]
    fn peel_norm_mismatch() {
        let x = HermitianMatrix::from_diagonal(&[1.0, 2.0]);
        let y = HermitianMatrix::from_diagonal(&[1.0, 3.0]);
        let s = peel_once(&ScalarFunction::square(), &x, &y, &PeelOptions::default()).unwrap();
        assert_eq!(s.norms, (4.0, 9.0));
        assert_eq!(s.status, StepStatus::NormMismatch);
    }

    #[test]
    fn decide_equal_on_identity_takes_one_step() {
        let x = HermitianMatrix::identity(3);
        let t = decide_equal(
            &ScalarFunction::square(),
            &x,
            &x,
            Direction::ConvexGe,
            &PeelOptions::default(),
        )
        .unwrap();
        assert!(t.is_equal());
        assert_eq!(t.steps.len(), 1);
        assert_eq!(t.steps[0].rank, 3);
    }

    #[test]
    fn decide_equal_random_equal_pair() {
        let mut rng = random::stream_rng(3, 0);
        let x = random::hermitian_in_box(4, 0.0, 5.0, &mut rng);
        let t = decide_equal(
            &ScalarFunction::square(),
            &x,
            &x,
            Direction::ConvexGe,
            &PeelOptions::default(),
        )
        .unwrap();
        assert!(t.is_equal(), "{:?}", t.conclusion);
        assert!(t.steps.len() <= 4);
        for pair in t.steps.windows(2) {
            assert!(pair[1].subspace_dim < pair[0].subspace_dim);
            assert!(pair[1].norms.0 <= pair[0].norms.0 + 1e-12);
        }
    }

    #[test]
    fn decide_equal_detects_small_perturbation() {
        let x = HermitianMatrix::from_diagonal(&[1.0, 2.0, 3.0]);
        let y = HermitianMatrix::from_diagonal(&[1.0, 2.0, 3.01]);
        let t = decide_equal(
            &ScalarFunction::square(),
            &x,
            &y,
            Direction::ConvexGe,
            &PeelOptions::default(),
        )
        .unwrap();
        match &t.conclusion {
            Conclusion::PremiseViolated { witness } => {
                let w = witness.witness.as_ref().unwrap();
                assert!(w.vector[2].norm() > 1.0 - 1e-6, "witness {:?}", w.vector);
                assert!(w.violation() > witness.tolerance);
            }
            other => panic!("expected premise violation, got {other:?}"),
        }
    }

    #[test]
    fn decide_equal_concave_direction() {
        let mut rng = random::stream_rng(4, 0);
        let x = random::hermitian_in_box(3, 0.5, 10.0, &mut rng);
        let t = decide_equal(
            &ScalarFunction::sqrt(),
            &x,
            &x,
            Direction::ConcaveLe,
            &PeelOptions::default(),
        )
        .unwrap();
        assert!(t.is_equal(), "{:?}", t.conclusion);
    }

    #[test]
    fn decide_equal_dimension_mismatch() {
        let x = HermitianMatrix::identity(2);
        let y = HermitianMatrix::identity(3);
        assert!(matches!(
            decide_equal(
                &ScalarFunction::square(),
                &x,
                &y,
                Direction::ConvexGe,
                &PeelOptions::default()
            ),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn find_violation_examples() {
        let x = HermitianMatrix::from_diagonal(&[4.0]);
        let y = HermitianMatrix::from_diagonal(&[1.0]);
        let v = find_violation(&ScalarFunction::sqrt(), &x, &y, Direction::ConcaveLe, 0, 8)
            .unwrap()
            .unwrap();
        let w = v.witness.unwrap();
        assert!((w.vector[0].norm() - 1.0).abs() < 1e-12);
        assert!((w.lhs - 2.0).abs() < 1e-12 && (w.rhs - 1.0).abs() < 1e-12);

        let z = HermitianMatrix::from_diagonal(&[1.0, 5.0]);
        assert!(
            find_violation(&ScalarFunction::sqrt(), &z, &z, Direction::ConcaveLe, 0, 8)
                .unwrap()
                .is_none()
        );
    }
}
