//! The vector-state Jensen relation
//!
//! ```text
//! ⟨h(A)ξ, ξ⟩ ≤ h(⟨Bξ, ξ⟩)   for every unit ξ
//! ```
//!
//! decided two independent ways. The tangent method checks the operator
//! inequalities `h(A) ≤ h'(λ)B − λh'(λ) + h(λ)` over a λ-grid with local
//! golden-section refinement; for concave `h` this family is equivalent to
//! the relation. The sphere method minimizes
//! `φ(ξ) = h(⟨Bξ,ξ⟩) − ⟨h(A)ξ,ξ⟩` directly by projected gradient descent
//! from random starts and is used as a falsifier and cross-check.
//!
//! Both methods share one tolerance, [`RelationProblem::tolerance`], so their
//! margins are directly comparable: for concave `h` the tangent margin and the
//! global minimum of `φ` are the same number.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::hermitian::{CVector, HermitianMatrix, C64, TAU_DOMAIN, TAU_PSD_REL};
use crate::random;
use crate::scalar::ScalarFunction;

pub const DEFAULT_GRID_POINTS: usize = 512;
pub const DEFAULT_RESTARTS: usize = 64;

/// Grid minima within this much of the global grid minimum get refined.
const REFINE_BAND: f64 = 1e-6;
const ARMIJO: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Tangent,
    Sphere,
}

/// Which dual relation is being asserted about `f`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Direction {
    /// concave `f`: `⟨f(X)ξ,ξ⟩ ≤ f(⟨Yξ,ξ⟩)`
    #[serde(rename = "concave-le")]
    ConcaveLe,
    /// convex `f`: `⟨f(X)ξ,ξ⟩ ≥ f(⟨Yξ,ξ⟩)`
    #[serde(rename = "convex-ge")]
    ConvexGe,
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "concave-le" => Ok(Direction::ConcaveLe),
            "convex-ge" => Ok(Direction::ConvexGe),
            other => Err(Error::Precondition(format!(
                "unknown direction `{other}` (expected concave-le or convex-ge)"
            ))),
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::ConcaveLe => "concave-le",
            Direction::ConvexGe => "convex-ge",
        })
    }
}

/// Rewrites a `direction` relation for `f` as a concave-≤ relation for `h`:
/// `h = f` for concave-≤, `h = −f` for convex-≥.
pub fn normalize(f: &ScalarFunction, direction: Direction) -> Result<ScalarFunction> {
    match direction {
        Direction::ConcaveLe if f.is_concave() => Ok(f.clone()),
        Direction::ConvexGe if f.is_convex() => Ok(f.negate()),
        _ => Err(Error::Shape {
            function: f.name().to_string(),
            found: format!("{:?}", f.curvature()).to_lowercase(),
            required: match direction {
                Direction::ConcaveLe => "concave for concave-le".into(),
                Direction::ConvexGe => "convex for convex-ge".into(),
            },
        }),
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RelationOptions {
    pub grid_points: usize,
    pub restarts: usize,
    pub seed: u64,
    pub max_iter: usize,
    pub grad_tol: f64,
}

impl Default for RelationOptions {
    fn default() -> Self {
        Self {
            grid_points: DEFAULT_GRID_POINTS,
            restarts: DEFAULT_RESTARTS,
            seed: 0,
            max_iter: 500,
            grad_tol: 1e-10,
        }
    }
}

fn serialize_vector<S: Serializer>(v: &[C64], s: S) -> std::result::Result<S::Ok, S::Error> {
    let pairs: Vec<[f64; 2]> = v.iter().map(|z| [z.re, z.im]).collect();
    pairs.serialize(s)
}

/// A unit vector with the two sides of the relation evaluated on it.
#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    #[serde(serialize_with = "serialize_vector")]
    pub vector: Vec<C64>,
    /// `⟨h(A)ξ,ξ⟩`
    pub lhs: f64,
    /// `h(⟨Bξ,ξ⟩)`
    pub rhs: f64,
}

impl Witness {
    pub fn violation(&self) -> f64 {
        self.lhs - self.rhs
    }

    pub fn as_vector(&self) -> CVector {
        CVector::from_column_slice(&self.vector)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RelationVerdict {
    pub holds: bool,
    /// Most negative gap found.
    pub margin: f64,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_star: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    pub method: Method,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub restarts: Option<usize>,
    pub seed: u64,
}

/// λ-grid, per-λ operator gaps and the refined minimum.
#[derive(Debug, Clone, Serialize)]
pub struct TangentScan {
    pub lambda_grid: Vec<f64>,
    pub gaps: Vec<f64>,
    pub lambda_star: f64,
    pub gap_star: f64,
}

/// `h`, `h(A)` and `B` with the shared numerics of both methods.
pub struct RelationProblem {
    h: ScalarFunction,
    h_a: HermitianMatrix,
    b: HermitianMatrix,
    b_lo: f64,
    b_hi: f64,
    h_a_norm: f64,
    b_norm: f64,
    tolerance: f64,
}

impl RelationProblem {
    pub fn new(h: &ScalarFunction, a: &HermitianMatrix, b: &HermitianMatrix) -> Result<Self> {
        if a.dim() != b.dim() {
            return Err(Error::DimensionMismatch {
                left: a.dim(),
                right: b.dim(),
            });
        }
        let h_a = a.apply_function(h)?;
        let ev = b.eigenvalues()?;
        let domain = h.domain();
        let snap = |x: f64| {
            domain.snap(x, TAU_DOMAIN).ok_or_else(|| Error::Domain {
                function: h.name().to_string(),
                value: x,
                domain: domain.to_string(),
            })
        };
        let b_lo = snap(ev[0])?;
        let b_hi = snap(ev[ev.len() - 1])?;
        let h_a_norm = h_a.norm();
        let b_norm = b.norm();
        let tolerance = TAU_PSD_REL * (1.0 + h_a_norm + h.eval(b_lo).abs().max(h.eval(b_hi).abs()));
        Ok(Self {
            h: h.clone(),
            h_a,
            b: b.clone(),
            b_lo,
            b_hi,
            h_a_norm,
            b_norm,
            tolerance,
        })
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn h_of_a(&self) -> &HermitianMatrix {
        &self.h_a
    }

    /// `T_λ(B) − h(A)` with `T_λ` the tangent of `h` at λ.
    pub fn gap_matrix(&self, lambda: f64) -> Result<HermitianMatrix> {
        let tl = self.h.tangent(lambda)?;
        Ok(self.b.affine(tl.slope, tl.intercept).sub(&self.h_a))
    }

    pub fn gap(&self, lambda: f64) -> Result<f64> {
        self.gap_matrix(lambda)?.psd_gap()
    }

    /// Interval `[λ_min(B), λ_max(B)]`, pulled into the open domain of `h`.
    fn lambda_range(&self) -> (f64, f64) {
        let d = self.h.domain();
        let pad = 1e-12 * (1.0 + self.b_hi.abs().max(self.b_lo.abs()));
        let mut lo = self.b_lo;
        let mut hi = self.b_hi;
        if d.lo.is_finite() && lo <= d.lo + pad {
            lo = d.lo + pad;
        }
        if d.hi.is_finite() && hi >= d.hi - pad {
            hi = d.hi - pad;
        }
        if hi < lo {
            hi = lo;
        }
        (lo, hi)
    }

    pub fn scan(&self, grid_points: usize) -> Result<TangentScan> {
        let (lo, hi) = self.lambda_range();
        let n = if hi > lo { grid_points.max(2) } else { 1 };
        let lambda_grid: Vec<f64> = (0..n)
            .map(|k| {
                if n == 1 {
                    lo
                } else {
                    lo + (hi - lo) * k as f64 / (n - 1) as f64
                }
            })
            .collect();
        let gaps = lambda_grid
            .iter()
            .map(|&l| self.gap(l))
            .collect::<Result<Vec<f64>>>()?;
        let grid_min = gaps.iter().copied().fold(f64::INFINITY, f64::min);
        let resolution = 1e-10 * (1.0 + hi.abs());
        let mut best = (lambda_grid[0], gaps[0]);
        for k in 0..n {
            let left = if k > 0 { gaps[k - 1] } else { f64::INFINITY };
            let right = if k + 1 < n {
                gaps[k + 1]
            } else {
                f64::INFINITY
            };
            let is_local_min = gaps[k] <= left && gaps[k] <= right;
            if !is_local_min || gaps[k] > grid_min + REFINE_BAND {
                continue;
            }
            let (mut cand_l, mut cand_g) = (lambda_grid[k], gaps[k]);
            if n > 1 {
                let a = lambda_grid[k.saturating_sub(1)];
                let b = lambda_grid[(k + 1).min(n - 1)];
                let (l, g) =
                    golden_section(|l| self.gap(l).unwrap_or(f64::INFINITY), a, b, resolution);
                if g < cand_g {
                    cand_l = l;
                    cand_g = g;
                }
            }
            if cand_g < best.1 {
                best = (cand_l, cand_g);
            }
        }
        Ok(TangentScan {
            lambda_grid,
            gaps,
            lambda_star: best.0,
            gap_star: best.1,
        })
    }

    /// `φ(ξ) = h(⟨Bξ,ξ⟩) − ⟨h(A)ξ,ξ⟩` for unit `ξ`.
    pub fn phi(&self, xi: &CVector) -> f64 {
        let s = self.clamp_to_range(self.b.quadratic_form(xi));
        self.h.eval(s) - self.h_a.quadratic_form(xi)
    }

    fn clamp_to_range(&self, s: f64) -> f64 {
        s.clamp(self.b_lo, self.b_hi)
    }

    pub fn witness(&self, xi: &CVector) -> Witness {
        let xi = xi / C64::new(xi.norm(), 0.0);
        let s = self.clamp_to_range(self.b.quadratic_form(&xi));
        Witness {
            lhs: self.h_a.quadratic_form(&xi),
            rhs: self.h.eval(s),
            vector: xi.iter().copied().collect(),
        }
    }

    /// Projected gradient descent for `φ` on the unit sphere from `start`.
    /// Returns the final iterate and its `φ`.
    pub fn descend(&self, start: &CVector, max_iter: usize, grad_tol: f64) -> (CVector, f64) {
        let (lam_lo, _) = self.lambda_range();
        let mut xi = start / C64::new(start.norm(), 0.0);
        let mut val = self.phi(&xi);
        let mut step = f64::NAN;
        for _ in 0..max_iter {
            let s = self.b.quadratic_form(&xi).max(lam_lo);
            let dh = self.h.d1(s);
            let bx = self.b.matrix() * &xi;
            let hx = self.h_a.matrix() * &xi;
            let g = (bx * C64::new(dh, 0.0) - hx) * C64::new(2.0, 0.0);
            let radial = xi.dotc(&g).re;
            let g_tan = &g - &xi * C64::new(radial, 0.0);
            let gn2 = g_tan.norm_squared();
            if gn2.sqrt() <= grad_tol {
                break;
            }
            let lipschitz = 2.0 * (self.h_a_norm + dh.abs() * self.b_norm) + 1e-300;
            let mut t = if step.is_finite() {
                (2.0 * step).min(1.0 / lipschitz * 8.0)
            } else {
                1.0 / lipschitz
            };
            let mut accepted = false;
            for _ in 0..60 {
                let mut cand = &xi - &g_tan * C64::new(t, 0.0);
                let cn = cand.norm();
                cand /= C64::new(cn, 0.0);
                let cv = self.phi(&cand);
                if cv <= val - ARMIJO * t * gn2 {
                    xi = cand;
                    val = cv;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if !accepted {
                break;
            }
            step = t;
        }
        (xi, val)
    }
}

fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// `λ_min(h'(λ)B − λh'(λ) + h(λ) − h(A))`.
pub fn tangent_gap(
    h: &ScalarFunction,
    a: &HermitianMatrix,
    b: &HermitianMatrix,
    lambda: f64,
) -> Result<f64> {
    RelationProblem::new(h, a, b)?.gap(lambda)
}

fn require_concave(h: &ScalarFunction) -> Result<()> {
    if h.is_concave() {
        Ok(())
    } else {
        Err(Error::Shape {
            function: h.name().to_string(),
            found: "convex".into(),
            required: "concave h for the tangent method (negate convex functions first)".into(),
        })
    }
}

pub fn tangent_scan(
    h: &ScalarFunction,
    a: &HermitianMatrix,
    b: &HermitianMatrix,
    grid_points: usize,
) -> Result<TangentScan> {
    require_concave(h)?;
    RelationProblem::new(h, a, b)?.scan(grid_points)
}

/// Tangent-family decision. On failure the witness is the eigenvector of the
/// most violating gap matrix, polished by sphere descent.
pub fn check_relation_tangent(
    h: &ScalarFunction,
    a: &HermitianMatrix,
    b: &HermitianMatrix,
    opts: &RelationOptions,
) -> Result<RelationVerdict> {
    require_concave(h)?;
    let problem = RelationProblem::new(h, a, b)?;
    let scan = problem.scan(opts.grid_points)?;
    let tol = problem.tolerance();
    let holds = scan.gap_star >= -tol;
    let witness = if holds {
        None
    } else {
        let sd = problem.gap_matrix(scan.lambda_star)?.spectral()?;
        let start = sd.eigenvector(0);
        let (polished, val) = problem.descend(&start, opts.max_iter, opts.grad_tol);
        let best = if val < problem.phi(&start) {
            polished
        } else {
            start
        };
        Some(problem.witness(&best))
    };
    Ok(RelationVerdict {
        holds,
        margin: scan.gap_star,
        tolerance: tol,
        lambda_star: Some(scan.lambda_star),
        witness,
        method: Method::Tangent,
        restarts: None,
        seed: opts.seed,
    })
}

/// Multi-start projected gradient descent on `φ`; restart `k` draws its
/// starting point from stream `k` of `opts.seed`.
pub fn check_relation_sphere(
    h: &ScalarFunction,
    a: &HermitianMatrix,
    b: &HermitianMatrix,
    opts: &RelationOptions,
) -> Result<RelationVerdict> {
    let problem = RelationProblem::new(h, a, b)?;
    Ok(sphere_verdict(&problem, opts))
}

pub(crate) fn sphere_verdict(problem: &RelationProblem, opts: &RelationOptions) -> RelationVerdict {
    let dim = problem.b.dim();
    let restarts = opts.restarts.max(1);
    let (_, best_xi, best_val) = (0..restarts)
        .into_par_iter()
        .map(|k| {
            let mut rng = random::stream_rng(opts.seed, k as u64);
            let start = random::unit_vector(dim, &mut rng);
            let (xi, val) = problem.descend(&start, opts.max_iter, opts.grad_tol);
            (k, xi, val)
        })
        .reduce_with(|x, y| {
            if y.2 < x.2 || (y.2 == x.2 && y.0 < x.0) {
                y
            } else {
                x
            }
        })
        .expect("at least one restart");
    let tol = problem.tolerance();
    let witness = problem.witness(&best_xi);
    let margin = best_val;
    let holds = margin >= -tol;
    RelationVerdict {
        holds,
        margin,
        tolerance: tol,
        lambda_star: None,
        witness: if holds { None } else { Some(witness) },
        method: Method::Sphere,
        restarts: Some(restarts),
        seed: opts.seed,
    }
}

/// Verdicts for `(X vs Y)` and `(Y vs X)` under `direction`, using the
/// tangent method after normalizing to concave-≤.
pub fn dual_relation_check(
    f: &ScalarFunction,
    x: &HermitianMatrix,
    y: &HermitianMatrix,
    direction: Direction,
    opts: &RelationOptions,
) -> Result<(RelationVerdict, RelationVerdict)> {
    let h = normalize(f, direction)?;
    let xy = check_relation_tangent(&h, x, y, opts)?;
    let yx = check_relation_tangent(&h, y, x, opts)?;
    Ok((xy, yx))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(x: f64) -> HermitianMatrix {
        HermitianMatrix::from_diagonal(&[x])
    }

    fn sqrt() -> ScalarFunction {
        ScalarFunction::sqrt()
    }

    #[test]
    fn tangent_gap_examples() {
        assert_eq!(
            tangent_gap(&sqrt(), &scalar(1.0), &scalar(1.0), 1.0).unwrap(),
            0.0
        );
        assert_eq!(
            tangent_gap(&sqrt(), &scalar(4.0), &scalar(1.0), 1.0).unwrap(),
            -1.0
        );
        assert_eq!(
            tangent_gap(&sqrt(), &scalar(1.0), &scalar(4.0), 4.0).unwrap(),
            1.0
        );
    }

    #[test]
    fn tangent_holds_with_equality_for_equal_diagonals() {
        let d = HermitianMatrix::from_diagonal(&[1.0, 4.0]);
        let v = check_relation_tangent(&sqrt(), &d, &d, &RelationOptions::default()).unwrap();
        assert!(v.holds);
        assert!(v.margin.abs() <= v.tolerance, "margin {}", v.margin);
        assert!(v.witness.is_none());
    }

    #[test]
    fn tangent_fails_on_scalar_case_with_witness() {
        let v = check_relation_tangent(
            &sqrt(),
            &scalar(4.0),
            &scalar(1.0),
            &RelationOptions::default(),
        )
        .unwrap();
        assert!(!v.holds);
        let w = v.witness.unwrap();
        assert!((w.vector[0].norm() - 1.0).abs() < 1e-12);
        assert!((w.lhs - 2.0).abs() < 1e-12 && (w.rhs - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tangent_holds_for_dominated_diagonal() {
        let a = HermitianMatrix::from_diagonal(&[1.0, 2.0]);
        let b = HermitianMatrix::from_diagonal(&[2.0, 3.0]);
        let opts = RelationOptions::default();
        assert!(
            check_relation_tangent(&sqrt(), &a, &b, &opts)
                .unwrap()
                .holds
        );
        assert!(check_relation_sphere(&sqrt(), &a, &b, &opts).unwrap().holds);
        // brute-force scan over real unit vectors (cos θ, sin θ)
        let ha = a.apply_function(&sqrt()).unwrap();
        for k in 0..=2000 {
            let th = std::f64::consts::PI * k as f64 / 2000.0;
            let xi = CVector::from_vec(vec![C64::new(th.cos(), 0.0), C64::new(th.sin(), 0.0)]);
            assert!(ha.quadratic_form(&xi) <= b.quadratic_form(&xi).sqrt() + 1e-15);
        }
    }

    #[test]
    fn tangent_rejects_convex_h() {
        let d = HermitianMatrix::from_diagonal(&[1.0, 4.0]);
        let err = check_relation_tangent(
            &ScalarFunction::square(),
            &d,
            &d,
            &RelationOptions::default(),
        );
        assert!(matches!(err, Err(Error::Shape { .. })));
    }

    #[test]
    fn domain_and_dimension_errors() {
        let neg = HermitianMatrix::from_diagonal(&[-1.0, 1.0]);
        let pos = HermitianMatrix::from_diagonal(&[1.0, 1.0]);
        let opts = RelationOptions::default();
        assert!(matches!(
            check_relation_tangent(&sqrt(), &neg, &pos, &opts),
            Err(Error::Domain { .. })
        ));
        assert!(matches!(
            check_relation_tangent(&sqrt(), &pos, &neg, &opts),
            Err(Error::Domain { .. })
        ));
        assert!(matches!(
            check_relation_sphere(&sqrt(), &pos, &scalar(1.0), &opts),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn sphere_scalar_case_is_sign_of_difference() {
        let opts = RelationOptions::default();
        let v = check_relation_sphere(&sqrt(), &scalar(4.0), &scalar(1.0), &opts).unwrap();
        assert!(!v.holds);
        assert!((v.margin + 1.0).abs() < 1e-12);
        let v = check_relation_sphere(&sqrt(), &scalar(1.0), &scalar(4.0), &opts).unwrap();
        assert!(v.holds);
        assert!((v.margin - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sphere_holds_on_equal_pair() {
        let mut rng = random::stream_rng(11, 0);
        let a = random::hermitian_in_box(4, 0.5, 10.0, &mut rng);
        let v = check_relation_sphere(&sqrt(), &a, &a, &RelationOptions::default()).unwrap();
        assert!(v.holds, "margin {}", v.margin);
        assert!(v.margin >= -v.tolerance);
    }

    #[test]
    fn dual_check_examples() {
        let opts = RelationOptions::default();
        let x = HermitianMatrix::from_diagonal(&[1.0, 2.0]);
        let (a, b) = dual_relation_check(&sqrt(), &x, &x, Direction::ConcaveLe, &opts).unwrap();
        assert!(a.holds && b.holds);

        let y = HermitianMatrix::from_diagonal(&[1.0, 3.0]);
        let (xy, yx) = dual_relation_check(&sqrt(), &x, &y, Direction::ConcaveLe, &opts).unwrap();
        assert!(xy.holds);
        assert!(!yx.holds);
        let w = yx.witness.unwrap();
        assert!(
            (w.vector[1].norm() - 1.0).abs() < 1e-9,
            "witness {:?}",
            w.vector
        );
        assert!(w.violation() > yx.tolerance);

        let (a, b) = dual_relation_check(
            &ScalarFunction::square(),
            &x,
            &x,
            Direction::ConvexGe,
            &opts,
        )
        .unwrap();
        assert!(a.holds && b.holds);

        assert!(matches!(
            dual_relation_check(
                &ScalarFunction::square(),
                &x,
                &x,
                Direction::ConcaveLe,
                &opts
            ),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn golden_section_finds_parabola_minimum() {
        let (x, fx) = golden_section(|t| (t - 0.3) * (t - 0.3) - 1.0, 0.0, 1.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-8);
        assert!((fx + 1.0).abs() < 1e-15);
    }

    #[test]
    fn direction_parses() {
        assert_eq!(
            "concave-le".parse::<Direction>().unwrap(),
            Direction::ConcaveLe
        );
        assert_eq!(
            "convex-ge".parse::<Direction>().unwrap(),
            Direction::ConvexGe
        );
        assert!("le".parse::<Direction>().is_err());
    }
}
