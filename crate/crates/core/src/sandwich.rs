//! The two-sided composed hypothesis
//!
//! ```text
//! ⟨(g∘f)(X)ξ,ξ⟩ ≤ g(⟨f(Y)ξ,ξ⟩) ≤ (g∘f)(⟨Xξ,ξ⟩)
//! ```
//!
//! and a numerical audit of the argument that it forces `X = Y`.
//!
//! The audit never assumes the hypothesis. It measures how far the operator
//! bounds `lower(λ, X) ≤ f(Y) ≤ upper(λ, X)` fail over a λ-grid (the premise
//! residuals) and checks every downstream inequality with its right-hand side
//! inflated by `K · max(0, −ρ)`, `K = dim · (1 + ‖f(Y)‖ + α)²`. At `X = Y` the
//! residuals vanish and every inequality is checked at face value.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hermitian::{op_norm, CMatrix, HermitianMatrix, Projection, C64, TAU_PROJ, TAU_PSD_REL};
use crate::jensen::{check_relation_tangent, RelationOptions, RelationVerdict};
use crate::scalar::ScalarFunction;

pub const CONSTANTS_GRID: usize = 200;
pub const PREMISE_GRID: usize = 64;
const C_MARGIN: f64 = 1.05;
const C_FLOOR: f64 = 1e-12;
const ALPHA_FLOOR: f64 = 1e-9;

fn require_concave_increasing(h: &ScalarFunction) -> Result<()> {
    if h.is_concave() && h.is_increasing() {
        Ok(())
    } else {
        Err(Error::Shape {
            function: h.name().to_string(),
            found: format!("{:?}/{:?}", h.monotone(), h.curvature()).to_lowercase(),
            required: "strictly increasing and concave".into(),
        })
    }
}

/// `f'(λ)t − λf'(λ) + f(λ)`
pub fn upper_scalar(f: &ScalarFunction, lambda: f64, t: f64) -> f64 {
    let d = f.d1(lambda);
    d * t - lambda * d + f.eval(lambda)
}

/// `[(g∘f)(t) + f(λ)g'(f(λ)) − g(f(λ))] / g'(f(λ))`
pub fn lower_scalar(f: &ScalarFunction, g: &ScalarFunction, lambda: f64, t: f64) -> f64 {
    let mu = f.eval(lambda);
    let dg = g.d1(mu);
    (g.eval(f.eval(t)) + mu * dg - g.eval(mu)) / dg
}

fn linspace(a: f64, b: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |k| {
        if n == 1 {
            a
        } else {
            a + (b - a) * k as f64 / (n - 1) as f64
        }
    })
}

/// The constants `c` and `α` on the box `[a,b]²`.
#[derive(Debug, Clone, Serialize)]
pub struct SandwichConstants {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Grid maximum before the safety margin.
    pub c_raw: f64,
    pub alpha: f64,
    pub grid: usize,
    pub f: ScalarFunction,
    pub g: ScalarFunction,
}

impl SandwichConstants {
    /// Smallest `k''(t) = 2c + (g∘f)''(t)/g'(f(λ))` and smallest
    /// `q(t) = lower(λ,t) + α` over a `grid × grid` box sample.
    pub fn grid_minima(&self, grid: usize) -> (f64, f64) {
        let mut k2 = f64::INFINITY;
        let mut q = f64::INFINITY;
        for lam in linspace(self.a, self.b, grid) {
            let dg = self.g.d1(self.f.eval(lam));
            for t in linspace(self.a, self.b, grid) {
                k2 = k2.min(2.0 * self.c + composed_d2(&self.f, &self.g, t) / dg);
                q = q.min(lower_scalar(&self.f, &self.g, lam, t) + self.alpha);
            }
        }
        (k2, q)
    }

    fn check_box(&self, lambda: f64, t: f64) -> Result<()> {
        let slack = 1e-12 * self.b;
        let inside = |x: f64| x >= self.a - slack && x <= self.b + slack;
        if inside(lambda) && inside(t) {
            Ok(())
        } else {
            Err(Error::Precondition(format!(
                "(λ, t) = ({lambda}, {t}) lies outside [{}, {}]²",
                self.a, self.b
            )))
        }
    }
}

/// `g''(f(t))f'(t)² + g'(f(t))f''(t)`
fn composed_d2(f: &ScalarFunction, g: &ScalarFunction, t: f64) -> f64 {
    let u = f.eval(t);
    let df = f.d1(t);
    g.d2(u) * df * df + g.d1(u) * f.d2(t)
}

/// Guarded grid maximization: `c` is 5% above the grid maximum of
/// `−(g∘f)''(t) / (2g'(f(λ)))`, `α` lifts `lower(λ,t) + α` to at least 1.
pub fn compute_constants(
    f: &ScalarFunction,
    g: &ScalarFunction,
    a: f64,
    b: f64,
) -> Result<SandwichConstants> {
    require_concave_increasing(f)?;
    require_concave_increasing(g)?;
    if !(a > 0.0 && a < b && b.is_finite()) {
        return Err(Error::Precondition(format!(
            "need 0 < a < b, got a = {a}, b = {b}"
        )));
    }
    f.try_d1(a)?;
    g.try_d1(f.eval(a))?;
    let mut c_raw = 0.0_f64;
    let mut lower_min = f64::INFINITY;
    for lam in linspace(a, b, CONSTANTS_GRID) {
        let dg = g.d1(f.eval(lam));
        for t in linspace(a, b, CONSTANTS_GRID) {
            c_raw = c_raw.max(-composed_d2(f, g, t) / (2.0 * dg));
            lower_min = lower_min.min(lower_scalar(f, g, lam, t));
        }
    }
    Ok(SandwichConstants {
        a,
        b,
        c: c_raw * C_MARGIN + C_FLOOR,
        c_raw,
        alpha: (1.0 - lower_min).max(0.0) + ALPHA_FLOOR,
        grid: CONSTANTS_GRID,
        f: f.clone(),
        g: g.clone(),
    })
}

/// `c(t−λ)² − [upper(λ,t) − lower(λ,t)]`, non-negative for valid constants.
pub fn lemma34_gap(k: &SandwichConstants, lambda: f64, t: f64) -> Result<f64> {
    k.check_box(lambda, t)?;
    let diff = upper_scalar(&k.f, lambda, t) - lower_scalar(&k.f, &k.g, lambda, t);
    Ok(k.c * (t - lambda).powi(2) - diff)
}

/// `c(t−λ)² − [q(t)⁻¹ − p(t)⁻¹]` with `p = upper + α`, `q = lower + α`.
pub fn lemma35_gap(k: &SandwichConstants, lambda: f64, t: f64) -> Result<f64> {
    k.check_box(lambda, t)?;
    let p = upper_scalar(&k.f, lambda, t) + k.alpha;
    let q = lower_scalar(&k.f, &k.g, lambda, t) + k.alpha;
    if p < 1.0 - 1e-9 || q < 1.0 - 1e-9 {
        return Err(Error::ConstantsInvalid(format!(
            "p = {p}, q = {q} at (λ, t) = ({lambda}, {t}); both must be ≥ 1"
        )));
    }
    Ok(k.c * (t - lambda).powi(2) - (1.0 / q - 1.0 / p))
}

/// `(lower(λ, X), upper(λ, X))` as matrices.
pub fn lemma33_bounds(
    f: &ScalarFunction,
    g: &ScalarFunction,
    x: &HermitianMatrix,
    lambda: f64,
) -> Result<(HermitianMatrix, HermitianMatrix)> {
    let df = f.try_d1(lambda)?;
    let mu = f.eval(lambda);
    let dg = g.try_d1(mu)?;
    let gf = ScalarFunction::compose(g, f)?;
    let lower = x
        .apply_function(&gf)?
        .affine(1.0 / dg, (mu * dg - g.eval(mu)) / dg);
    let upper = x.affine(df, mu - lambda * df);
    Ok((lower, upper))
}

fn check_positive(name: &str, m: &HermitianMatrix) -> Result<()> {
    let gap = m.psd_gap()?;
    if gap < -m.tau_psd() {
        return Err(Error::Precondition(format!(
            "{name} must be positive (smallest eigenvalue {gap:e})"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct SandwichVerdict {
    /// `⟨(g∘f)(X)ξ,ξ⟩ ≤ g(⟨f(Y)ξ,ξ⟩)`
    pub left: RelationVerdict,
    /// `⟨f(Y)ξ,ξ⟩ ≤ f(⟨Xξ,ξ⟩)`
    pub right: RelationVerdict,
}

impl SandwichVerdict {
    pub fn holds(&self) -> bool {
        self.left.holds && self.right.holds
    }
}

/// Both halves of the sandwich through the tangent method.
pub fn check_sandwich(
    f: &ScalarFunction,
    g: &ScalarFunction,
    x: &HermitianMatrix,
    y: &HermitianMatrix,
    opts: &RelationOptions,
) -> Result<SandwichVerdict> {
    require_concave_increasing(f)?;
    require_concave_increasing(g)?;
    check_positive("X", x)?;
    check_positive("Y", y)?;
    let fx = x.apply_function(f)?;
    let fy = y.apply_function(f)?;
    Ok(SandwichVerdict {
        left: check_relation_tangent(g, &fx, &fy, opts)?,
        right: check_relation_tangent(f, y, x, opts)?,
    })
}

/// Kernel projections (eigenvalues within `τ_cluster` of 0) of `X` and `Y`
/// coincide within [`TAU_PROJ`].
pub fn kernel_match(x: &HermitianMatrix, y: &HermitianMatrix) -> Result<bool> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            left: x.dim(),
            right: y.dim(),
        });
    }
    let kernel = |m: &HermitianMatrix| -> Result<Projection> {
        let sd = m.spectral()?;
        let tau = m.tau_cluster();
        let idx: Vec<usize> = (0..m.dim())
            .filter(|&k| sd.eigenvalues[k].abs() <= tau)
            .collect();
        Ok(sd.eigenprojection(&idx))
    };
    let px = kernel(x)?;
    let py = kernel(y)?;
    Ok(px.rank() == py.rank() && op_norm(&(px.matrix() - py.matrix())) <= TAU_PROJ)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct BoundCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

/// Bounds (1) and (2) for one projection `P ≤ χ_[a,b)(X)` and one λ.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BoundAudit {
    pub lambda: f64,
    pub rank: usize,
    /// `‖XP − λP‖`
    pub deviation: f64,
    /// `‖(f(X)+α)P − P(f(Y)+α)P‖ ≤ c‖XP − λP‖²`
    pub bound1: BoundCheck,
    /// `‖P(f(Y)+α)P − (P(f(Y)+α)⁻¹P)⁻¹‖ ≤ (1 + (f(b)+α)²)c‖XP − λP‖²`
    pub bound2: BoundCheck,
    pub slack: f64,
}

/// Shared state of an audit: `f(X)+α`, `f(Y)+α`, premise residuals and slack.
pub struct Audit {
    x: HermitianMatrix,
    fx_alpha: HermitianMatrix,
    fy_alpha: HermitianMatrix,
    constants: SandwichConstants,
    pub rho_lower: f64,
    pub rho_upper: f64,
    /// `K = dim · (1 + ‖f(Y)‖ + α)²`
    pub slack_multiplier: f64,
    pub tau: f64,
}

impl Audit {
    pub fn new(
        x: &HermitianMatrix,
        y: &HermitianMatrix,
        constants: &SandwichConstants,
    ) -> Result<Self> {
        if x.dim() != y.dim() {
            return Err(Error::DimensionMismatch {
                left: x.dim(),
                right: y.dim(),
            });
        }
        let f = &constants.f;
        let g = &constants.g;
        let alpha = constants.alpha;
        let fx = x.apply_function(f)?;
        let fy = y.apply_function(f)?;
        let mut rho_lower = 0.0_f64;
        let mut rho_upper = 0.0_f64;
        for lam in linspace(constants.a, constants.b, PREMISE_GRID) {
            let (lower, upper) = lemma33_bounds(f, g, x, lam)?;
            let d_lower = fy.sub(&lower);
            let d_upper = upper.sub(&fy);
            let gl = d_lower.psd_gap()?;
            let gu = d_upper.psd_gap()?;
            if gl < -d_lower.tau_psd() {
                rho_lower = rho_lower.min(gl);
            }
            if gu < -d_upper.tau_psd() {
                rho_upper = rho_upper.min(gu);
            }
        }
        let fy_norm = fy.norm();
        let fy_alpha = fy.shift(alpha);
        Ok(Self {
            x: x.clone(),
            fx_alpha: fx.shift(alpha),
            tau: TAU_PSD_REL * (1.0 + fy_alpha.norm()),
            fy_alpha,
            constants: constants.clone(),
            rho_lower,
            rho_upper,
            slack_multiplier: x.dim() as f64 * (1.0 + fy_norm + alpha).powi(2),
        })
    }

    /// Absolute slack added to every right-hand side.
    pub fn slack(&self) -> f64 {
        self.slack_multiplier * (-self.rho_lower.min(self.rho_upper)).max(0.0) + self.tau
    }

    fn check(&self, lhs: f64, rhs: f64) -> BoundCheck {
        BoundCheck {
            lhs,
            rhs,
            pass: lhs <= rhs + self.slack(),
        }
    }

    /// `(1 + (f(b)+α)²) c`
    fn bound2_factor(&self) -> f64 {
        let k = &self.constants;
        (1.0 + (k.f.eval(k.b) + k.alpha).powi(2)) * k.c
    }

    pub fn audit(&self, p: &Projection, lambda: f64) -> Result<BoundAudit> {
        if p.rank() == 0 {
            return Err(Error::EmptyProjection);
        }
        let k = &self.constants;
        let pm = p.matrix();
        let deviation = op_norm(&(self.x.matrix() * pm - pm * C64::new(lambda, 0.0)));
        let fy_p = self.fy_alpha.matrix() * pm;
        let lhs1 = op_norm(&(self.fx_alpha.matrix() * pm - pm * &fy_p));
        let comp = self.fy_alpha.compress(p)?;
        let comp_inv = self.fy_alpha.compressed_inverse(p)?;
        let lhs2 = op_norm(&(comp.matrix() - comp_inv.matrix()));
        let d2 = deviation * deviation;
        Ok(BoundAudit {
            lambda,
            rank: p.rank(),
            deviation,
            bound1: self.check(lhs1, k.c * d2),
            bound2: self.check(lhs2, self.bound2_factor() * d2),
            slack: self.slack(),
        })
    }
}

/// Bounds (1) and (2) for a single projection; see [`Audit`].
pub fn audit_bounds(
    x: &HermitianMatrix,
    y: &HermitianMatrix,
    constants: &SandwichConstants,
    p: &Projection,
    lambda: f64,
) -> Result<BoundAudit> {
    let chi = x.spectral_projection(constants.a, constants.b)?.projection;
    let contained = op_norm(&(p.matrix() * chi.matrix() - p.matrix()));
    if contained > TAU_PROJ * x.dim() as f64 {
        return Err(Error::Precondition(format!(
            "P is not below χ_[{}, {})(X) (‖P χ − P‖ = {contained:e})",
            constants.a, constants.b
        )));
    }
    if lambda < constants.a || lambda > constants.b {
        return Err(Error::Precondition(format!(
            "λ = {lambda} outside [{}, {}]",
            constants.a, constants.b
        )));
    }
    Audit::new(x, y, constants)?.audit(p, lambda)
}

/// Spectral partition of `X` over `[a, b)` into `n` equal intervals.
#[derive(Debug, Clone, Serialize)]
pub struct PartitionScheme {
    pub n: usize,
    /// Left endpoints `λ_i = a + (i−1)(b−a)/n`.
    pub lambdas: Vec<f64>,
    /// Partition points after nudging away from eigenvalues.
    pub points: Vec<f64>,
    pub nudged: usize,
    #[serde(skip)]
    pub projections: Vec<Projection>,
}

impl PartitionScheme {
    /// Partition points within `τ_cluster` of an eigenvalue are moved down by
    /// `10·τ_cluster` until clear.
    pub fn build(x: &HermitianMatrix, a: f64, b: f64, n: usize) -> Result<Self> {
        let sd = x.spectral()?;
        let tau = x.tau_cluster();
        let width = (b - a) / n as f64;
        let mut nudged = 0;
        let points: Vec<f64> = (0..=n)
            .map(|k| {
                let mut p = if k == n { b } else { a + k as f64 * width };
                let mut moved = false;
                for _ in 0..1000 {
                    if sd.eigenvalues.iter().any(|&e| (e - p).abs() <= tau) {
                        p -= 10.0 * tau;
                        moved = true;
                    } else {
                        break;
                    }
                }
                if moved {
                    nudged += 1;
                }
                p
            })
            .collect();
        let projections = (0..n)
            .map(|i| {
                let idx: Vec<usize> = (0..sd.eigenvalues.len())
                    .filter(|&k| {
                        sd.eigenvalues[k] >= points[i] && sd.eigenvalues[k] < points[i + 1]
                    })
                    .collect();
                sd.eigenprojection(&idx)
            })
            .collect();
        Ok(Self {
            n,
            lambdas: (0..n).map(|i| a + i as f64 * width).collect(),
            points,
            nudged,
            projections,
        })
    }

    /// `Σ P_i`
    pub fn total(&self) -> CMatrix {
        let dim = self.projections[0].dim();
        self.projections
            .iter()
            .fold(CMatrix::zeros(dim, dim), |acc, p| acc + p.matrix())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FinalEstimate {
    /// `‖f(X)χ − f(Y)χ‖`, `χ = χ_[a,b)(X)`
    pub lhs: f64,
    /// `c(b−a)²/n² + √((f(b)+α)(1+(f(b)+α)²)c(b−a)²/n)`
    pub rhs: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct DiscretizationReport {
    pub n: usize,
    pub a: f64,
    pub b: f64,
    pub constants: SandwichConstants,
    pub premise_residuals: (f64, f64),
    pub slack_multiplier: f64,
    /// Worst bound (1) over the partition.
    pub bound1: BoundCheck,
    /// Worst bound (2) over the partition.
    pub bound2: BoundCheck,
    pub bound3: BoundCheck,
    pub bound4: BoundCheck,
    pub final_estimate: FinalEstimate,
    pub kernel_match: bool,
    pub partition: PartitionScheme,
    pub skipped_intervals: usize,
    /// `max_i ‖XP_i − λ_iP_i‖ − (b−a)/n`
    pub partition_excess: f64,
}

impl DiscretizationReport {
    pub fn pass(&self) -> bool {
        self.bound1.pass
            && self.bound2.pass
            && self.bound3.pass
            && self.bound4.pass
            && self.final_estimate.pass
    }

    pub const CSV_HEADER: &'static str =
        "n,rho_lower,rho_upper,b3_lhs,b3_rhs,b4_lhs,b4_rhs,final_lhs,final_rhs,pass";

    pub fn csv_row(&self) -> String {
        use crate::report::format_sig17 as s;
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.n,
            s(self.premise_residuals.0),
            s(self.premise_residuals.1),
            s(self.bound3.lhs),
            s(self.bound3.rhs),
            s(self.bound4.lhs),
            s(self.bound4.rhs),
            s(self.final_estimate.lhs),
            s(self.final_estimate.rhs),
            self.pass()
        )
    }
}

fn worst(checks: impl Iterator<Item = BoundCheck>) -> BoundCheck {
    checks
        .max_by(|p, q| (p.lhs - p.rhs).total_cmp(&(q.lhs - q.rhs)))
        .unwrap_or(BoundCheck {
            lhs: 0.0,
            rhs: 0.0,
            pass: true,
        })
}

/// Validates the pipeline preconditions, including the `a > 0` requirement.
pub fn check_preconditions(
    x: &HermitianMatrix,
    y: &HermitianMatrix,
    a: f64,
    b: f64,
    n: usize,
) -> Result<()> {
    if a <= 0.0 {
        return Err(Error::Precondition(format!(
            "a must be positive, got a = {a}: the quadratic tangent-gap constant c is unbounded \
             as the lower endpoint tends to 0 (see remark36_ratio)"
        )));
    }
    if a >= b || b.is_nan() {
        return Err(Error::Precondition(format!(
            "need a < b, got a = {a}, b = {b}"
        )));
    }
    if n == 0 {
        return Err(Error::Precondition("n must be at least 1".into()));
    }
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            left: x.dim(),
            right: y.dim(),
        });
    }
    check_positive("X", x)?;
    check_positive("Y", y)?;
    for (name, m) in [("X", x), ("Y", y)] {
        let norm = m.norm();
        if norm >= b {
            return Err(Error::Precondition(format!(
                "‖{name}‖ < b is required, but ‖{name}‖ = {norm} and b = {b}"
            )));
        }
    }
    Ok(())
}

/// One discretization level `n`.
pub fn discretize(
    f: &ScalarFunction,
    g: &ScalarFunction,
    x: &HermitianMatrix,
    y: &HermitianMatrix,
    a: f64,
    b: f64,
    n: usize,
) -> Result<DiscretizationReport> {
    check_preconditions(x, y, a, b, n)?;
    let constants = compute_constants(f, g, a, b)?;
    let audit = Audit::new(x, y, &constants)?;
    discretize_with(&audit, x, y, n)
}

/// Discretization for each `n` in `ns`, sharing constants and premise
/// residuals; levels run in parallel, output order follows `ns`.
pub fn discretize_sweep(
    f: &ScalarFunction,
    g: &ScalarFunction,
    x: &HermitianMatrix,
    y: &HermitianMatrix,
    a: f64,
    b: f64,
    ns: &[usize],
) -> Result<Vec<DiscretizationReport>> {
    for &n in ns {
        check_preconditions(x, y, a, b, n)?;
    }
    let constants = compute_constants(f, g, a, b)?;
    let audit = Audit::new(x, y, &constants)?;
    ns.par_iter()
        .map(|&n| discretize_with(&audit, x, y, n))
        .collect()
}

fn discretize_with(
    audit: &Audit,
    x: &HermitianMatrix,
    y: &HermitianMatrix,
    n: usize,
) -> Result<DiscretizationReport> {
    let k = &audit.constants;
    let (a, b) = (k.a, k.b);
    let dim = x.dim();
    let partition = PartitionScheme::build(x, a, b, n)?;
    let width = (b - a) / n as f64;
    let identity = CMatrix::identity(dim, dim);

    let mut sum3 = CMatrix::zeros(dim, dim);
    let mut sum4 = CMatrix::zeros(dim, dim);
    let mut audits = Vec::with_capacity(n);
    let mut skipped = 0;
    let mut excess = f64::NEG_INFINITY;
    for (p, &lam) in partition.projections.iter().zip(&partition.lambdas) {
        if p.rank() == 0 {
            skipped += 1;
            continue;
        }
        let rec = audit.audit(p, lam)?;
        excess = excess.max(rec.deviation - width);
        audits.push(rec);
        let pm = p.matrix();
        let fy_p = audit.fy_alpha.matrix() * pm;
        sum3 += audit.fx_alpha.matrix() * pm - pm * &fy_p;
        sum4 += (&identity - pm) * &fy_p;
    }

    let fb_alpha = k.f.eval(b) + k.alpha;
    let b3_rhs = k.c * (b - a).powi(2) / (n * n) as f64;
    let b4_rhs = (fb_alpha * (1.0 + fb_alpha * fb_alpha) * k.c * (b - a).powi(2) / n as f64).sqrt();
    let bound3 = audit.check(op_norm(&sum3), b3_rhs);
    let bound4 = audit.check(op_norm(&sum4), b4_rhs);

    let chi = partition.total();
    // f(X)χ − f(Y)χ = (f(X)+α)χ − (f(Y)+α)χ
    let final_lhs = op_norm(&((audit.fx_alpha.matrix() - audit.fy_alpha.matrix()) * &chi));
    let final_rhs = b3_rhs + b4_rhs;
    let final_estimate = FinalEstimate {
        lhs: final_lhs,
        rhs: final_rhs,
        pass: final_lhs <= final_rhs + 2.0 * audit.slack(),
    };

    Ok(DiscretizationReport {
        n,
        a,
        b,
        constants: k.clone(),
        premise_residuals: (audit.rho_lower, audit.rho_upper),
        slack_multiplier: audit.slack_multiplier,
        bound1: worst(audits.iter().map(|r| r.bound1)),
        bound2: worst(audits.iter().map(|r| r.bound2)),
        bound3,
        bound4,
        final_estimate,
        kernel_match: kernel_match(x, y)?,
        partition,
        skipped_intervals: skipped,
        partition_excess: if excess.is_finite() { excess } else { 0.0 },
    })
}

/// `[t/(2√λ) + 3√λ/2 − 2λ^{1/4}t^{1/4}] / (t − λ)²`, the quadratic-bound
/// ratio for `f = g = √t`; unbounded as `λ → 0`.
pub fn remark36_ratio(t: f64, lambda: f64) -> Result<f64> {
    if !(t > 0.0 && lambda > 0.0) {
        return Err(Error::Precondition(format!(
            "t and λ must be positive, got t = {t}, λ = {lambda}"
        )));
    }
    if t == lambda {
        return Err(Error::UndefinedPoint(t));
    }
    let sl = lambda.sqrt();
    let num = t / (2.0 * sl) + 1.5 * sl - 2.0 * lambda.powf(0.25) * t.powf(0.25);
    Ok(num / (t - lambda).powi(2))
}

/// `M = 2(λX)^{1/2} − λI` and `λ_min(M)`; diagnostic only.
pub fn remark36_lower_bound(x: &HermitianMatrix, lambda: f64) -> Result<(HermitianMatrix, f64)> {
    if lambda.is_nan() || lambda <= 0.0 {
        return Err(Error::Precondition(format!(
            "λ must be positive, got {lambda}"
        )));
    }
    check_positive("X", x)?;
    let m = x
        .scale(lambda)
        .apply_function(&ScalarFunction::sqrt())?
        .affine(2.0, -lambda);
    let gap = m.psd_gap()?;
    Ok((m, gap))
}
