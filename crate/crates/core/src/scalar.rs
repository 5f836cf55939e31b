//! Scalar function descriptors: values, analytic first and second
//! derivatives, domains and monotonicity/curvature metadata.
//!
//! Functions are built from a small catalog (`sqrt`, `pow:p`, `log1p`,
//! `affine:a,b`, `square`) closed under negation and composition. The textual
//! form accepted by [`ScalarFunction::parse`] is also the `name` used in
//! reports, so every descriptor can be reconstructed from its name.

use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Monotone {
    StrictlyIncreasing,
    StrictlyDecreasing,
}

impl Monotone {
    fn flip(self) -> Self {
        match self {
            Monotone::StrictlyIncreasing => Monotone::StrictlyDecreasing,
            Monotone::StrictlyDecreasing => Monotone::StrictlyIncreasing,
        }
    }
}

/// `Linear` functions are both concave and convex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Curvature {
    Concave,
    Convex,
    Linear,
}

impl Curvature {
    fn flip(self) -> Self {
        match self {
            Curvature::Concave => Curvature::Convex,
            Curvature::Convex => Curvature::Concave,
            Curvature::Linear => Curvature::Linear,
        }
    }
}

/// A real interval; endpoints may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Domain {
    pub const REAL: Domain = Domain {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
        lo_closed: false,
        hi_closed: false,
    };

    pub const NONNEGATIVE: Domain = Domain {
        lo: 0.0,
        hi: f64::INFINITY,
        lo_closed: true,
        hi_closed: false,
    };

    pub fn contains(&self, t: f64) -> bool {
        let above = t > self.lo || (self.lo_closed && t == self.lo);
        let below = t < self.hi || (self.hi_closed && t == self.hi);
        above && below
    }

    pub fn contains_interior(&self, t: f64) -> bool {
        t > self.lo && t < self.hi
    }

    /// `t` itself when inside, the nearest closed endpoint when `t` misses it
    /// by at most `tol`, otherwise `None`.
    pub fn snap(&self, t: f64, tol: f64) -> Option<f64> {
        if self.contains(t) {
            Some(t)
        } else if self.lo_closed && t < self.lo && t >= self.lo - tol {
            Some(self.lo)
        } else if self.hi_closed && t > self.hi && t <= self.hi + tol {
            Some(self.hi)
        } else {
            None
        }
    }

    pub fn intersect(&self, other: &Domain) -> Domain {
        let (lo, lo_closed) = if self.lo > other.lo {
            (self.lo, self.lo_closed)
        } else if other.lo > self.lo {
            (other.lo, other.lo_closed)
        } else {
            (self.lo, self.lo_closed && other.lo_closed)
        };
        let (hi, hi_closed) = if self.hi < other.hi {
            (self.hi, self.hi_closed)
        } else if other.hi < self.hi {
            (other.hi, other.hi_closed)
        } else {
            (self.hi, self.hi_closed && other.hi_closed)
        };
        Domain {
            lo,
            hi,
            lo_closed,
            hi_closed,
        }
    }

    /// Preimage under `t ↦ a·t + b`, `a ≠ 0`.
    fn affine_preimage(&self, a: f64, b: f64) -> Domain {
        let lo = (self.lo - b) / a;
        let hi = (self.hi - b) / a;
        if a > 0.0 {
            Domain {
                lo,
                hi,
                lo_closed: self.lo_closed,
                hi_closed: self.hi_closed,
            }
        } else {
            Domain {
                lo: hi,
                hi: lo,
                lo_closed: self.hi_closed,
                hi_closed: self.lo_closed,
            }
        }
    }

    /// A finite window inside the domain for sampling checks.
    fn sample_window(&self) -> (f64, f64) {
        let lo = if self.lo.is_finite() {
            if self.lo_closed {
                self.lo
            } else {
                self.lo + 1e-9 * (1.0 + self.lo.abs())
            }
        } else if self.hi.is_finite() {
            self.hi - 200.0
        } else {
            -100.0
        };
        let hi = if self.hi.is_finite() {
            if self.hi_closed {
                self.hi
            } else {
                self.hi - 1e-9 * (1.0 + self.hi.abs())
            }
        } else {
            lo.max(0.0) + 100.0
        };
        (lo, hi)
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let num = |x: f64| {
            if x == f64::INFINITY {
                "∞".to_string()
            } else if x == f64::NEG_INFINITY {
                "-∞".to_string()
            } else {
                x.to_string()
            }
        };
        write!(
            f,
            "{}{}, {}{}",
            if self.lo_closed { '[' } else { '(' },
            num(self.lo),
            num(self.hi),
            if self.hi_closed { ']' } else { ')' }
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Sqrt,
    Pow(f64),
    Log1p,
    Affine(f64, f64),
    Square,
    Neg(Box<ScalarFunction>),
    Compose(Box<ScalarFunction>, Box<ScalarFunction>),
}

/// A strictly monotone `C²` function with analytic derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarFunction {
    kind: Kind,
    name: String,
    domain: Domain,
    monotone: Monotone,
    curvature: Curvature,
}

impl Serialize for ScalarFunction {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.name)
    }
}

impl fmt::Display for ScalarFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

fn invalid(function: &str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        function: function.to_string(),
        reason: reason.into(),
    }
}

impl ScalarFunction {
    pub fn sqrt() -> Self {
        Self {
            kind: Kind::Sqrt,
            name: "sqrt".into(),
            domain: Domain::NONNEGATIVE,
            monotone: Monotone::StrictlyIncreasing,
            curvature: Curvature::Concave,
        }
    }

    /// `t^p` on `[0, ∞)`; `0 < p < 1` is concave, `p > 1` convex.
    pub fn pow(p: f64) -> Result<Self> {
        if !p.is_finite() || p <= 0.0 || p == 1.0 {
            return Err(invalid(
                "pow",
                format!("exponent {p} must be in (0,1) or (1,∞)"),
            ));
        }
        Ok(Self {
            kind: Kind::Pow(p),
            name: format!("pow:{p}"),
            domain: Domain::NONNEGATIVE,
            monotone: Monotone::StrictlyIncreasing,
            curvature: if p < 1.0 {
                Curvature::Concave
            } else {
                Curvature::Convex
            },
        })
    }

    pub fn log1p() -> Self {
        Self {
            kind: Kind::Log1p,
            name: "log1p".into(),
            domain: Domain {
                lo: -1.0,
                hi: f64::INFINITY,
                lo_closed: false,
                hi_closed: false,
            },
            monotone: Monotone::StrictlyIncreasing,
            curvature: Curvature::Concave,
        }
    }

    /// `a·t + b`, `a ≠ 0`.
    pub fn affine(a: f64, b: f64) -> Result<Self> {
        if !a.is_finite() || !b.is_finite() || a == 0.0 {
            return Err(invalid(
                "affine",
                format!("slope {a} must be finite and non-zero"),
            ));
        }
        Ok(Self {
            kind: Kind::Affine(a, b),
            name: format!("affine:{a},{b}"),
            domain: Domain::REAL,
            monotone: if a > 0.0 {
                Monotone::StrictlyIncreasing
            } else {
                Monotone::StrictlyDecreasing
            },
            curvature: Curvature::Linear,
        })
    }

    /// `t²` on `[0, ∞)`.
    pub fn square() -> Self {
        Self {
            kind: Kind::Square,
            name: "square".into(),
            domain: Domain::NONNEGATIVE,
            monotone: Monotone::StrictlyIncreasing,
            curvature: Curvature::Convex,
        }
    }

    /// Catalog lookup by name and parameter list.
    pub fn builtin(name: &str, params: &[f64]) -> Result<Self> {
        let arity = |n: usize| {
            if params.len() == n {
                Ok(())
            } else {
                Err(invalid(
                    name,
                    format!("expected {n} parameter(s), got {}", params.len()),
                ))
            }
        };
        match name {
            "sqrt" => arity(0).map(|_| Self::sqrt()),
            "pow" => arity(1).and_then(|_| Self::pow(params[0])),
            "log1p" => arity(0).map(|_| Self::log1p()),
            "affine" => arity(2).and_then(|_| Self::affine(params[0], params[1])),
            "square" => arity(0).map(|_| Self::square()),
            _ => Err(Error::UnknownFunction(name.to_string())),
        }
    }

    /// Parses the function mini-language: `sqrt`, `pow:0.3`, `log1p`,
    /// `affine:2,1`, `square`, `neg(f)`, `compose(outer,inner)`.
    pub fn parse(spec: &str) -> Result<Self> {
        let mut p = Parser { spec, pos: 0 };
        let f = p.function()?;
        if p.pos != spec.len() {
            return Err(p.error("trailing input"));
        }
        Ok(f)
    }

    /// `outer ∘ inner`.
    pub fn compose(outer: &ScalarFunction, inner: &ScalarFunction) -> Result<Self> {
        if inner.kind == Kind::Affine(1.0, 0.0) {
            return Ok(outer.clone());
        }
        if outer.kind == Kind::Affine(1.0, 0.0) {
            return Ok(inner.clone());
        }
        let unsupported = |reason: &str| Error::UnsupportedComposition {
            outer: outer.name.clone(),
            inner: inner.name.clone(),
            reason: reason.to_string(),
        };
        use Curvature::*;
        let outer_inc = outer.monotone == Monotone::StrictlyIncreasing;
        let curvature = match (outer.curvature, inner.curvature) {
            (Linear, c) => {
                if outer_inc {
                    c
                } else {
                    c.flip()
                }
            }
            (c, Linear) => c,
            (Concave, Concave) if outer_inc => Concave,
            (Convex, Convex) if outer_inc => Convex,
            (Concave, Convex) if !outer_inc => Concave,
            (Convex, Concave) if !outer_inc => Convex,
            _ => {
                return Err(unsupported(
                    "curvature of the composition is not determined",
                ))
            }
        };
        let monotone = if outer_inc {
            inner.monotone
        } else {
            inner.monotone.flip()
        };
        let domain = match inner.kind {
            Kind::Affine(a, b) => inner.domain.intersect(&outer.domain.affine_preimage(a, b)),
            _ => {
                let (lo, hi) = inner.domain.sample_window();
                let bad = (0..=1000)
                    .map(|k| lo + (hi - lo) * k as f64 / 1000.0)
                    .map(|t| inner.eval(t))
                    .find(|&v| !outer.domain.contains(v));
                if let Some(v) = bad {
                    return Err(unsupported(&format!(
                        "inner value {v} leaves the outer domain {}",
                        outer.domain
                    )));
                }
                inner.domain
            }
        };
        if domain.lo >= domain.hi || domain.lo.is_nan() || domain.hi.is_nan() {
            return Err(unsupported("empty domain"));
        }
        Ok(Self {
            name: format!("compose({},{})", outer.name, inner.name),
            kind: Kind::Compose(Box::new(outer.clone()), Box::new(inner.clone())),
            domain,
            monotone,
            curvature,
        })
    }

    /// `-f`: values and derivatives negated, monotonicity and curvature flipped.
    pub fn negate(&self) -> Self {
        match &self.kind {
            Kind::Affine(a, b) => Self::affine(-a, -b).expect("negated slope stays non-zero"),
            Kind::Neg(inner) => (**inner).clone(),
            _ => Self {
                kind: Kind::Neg(Box::new(self.clone())),
                name: format!("neg({})", self.name),
                domain: self.domain,
                monotone: self.monotone.flip(),
                curvature: self.curvature.flip(),
            },
        }
    }

    /// `f + c`.
    pub fn shifted(&self, c: f64) -> Result<Self> {
        if c == 0.0 {
            return Ok(self.clone());
        }
        Self::compose(&Self::affine(1.0, c)?, self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn monotone(&self) -> Monotone {
        self.monotone
    }

    pub fn curvature(&self) -> Curvature {
        self.curvature
    }

    pub fn is_increasing(&self) -> bool {
        self.monotone == Monotone::StrictlyIncreasing
    }

    pub fn is_concave(&self) -> bool {
        matches!(self.curvature, Curvature::Concave | Curvature::Linear)
    }

    pub fn is_convex(&self) -> bool {
        matches!(self.curvature, Curvature::Convex | Curvature::Linear)
    }

    /// Value at `t`; no domain check.
    pub fn eval(&self, t: f64) -> f64 {
        match &self.kind {
            Kind::Sqrt => t.sqrt(),
            Kind::Pow(p) => t.powf(*p),
            Kind::Log1p => t.ln_1p(),
            Kind::Affine(a, b) => a * t + b,
            Kind::Square => t * t,
            Kind::Neg(f) => -f.eval(t),
            Kind::Compose(g, f) => g.eval(f.eval(t)),
        }
    }

    /// First derivative at `t`; no domain check.
    pub fn d1(&self, t: f64) -> f64 {
        match &self.kind {
            Kind::Sqrt => 0.5 / t.sqrt(),
            Kind::Pow(p) => p * t.powf(p - 1.0),
            Kind::Log1p => 1.0 / (1.0 + t),
            Kind::Affine(a, _) => *a,
            Kind::Square => 2.0 * t,
            Kind::Neg(f) => -f.d1(t),
            Kind::Compose(g, f) => g.d1(f.eval(t)) * f.d1(t),
        }
    }

    /// Second derivative at `t`; no domain check.
    pub fn d2(&self, t: f64) -> f64 {
        match &self.kind {
            Kind::Sqrt => -0.25 / (t * t.sqrt()),
            Kind::Pow(p) => p * (p - 1.0) * t.powf(p - 2.0),
            Kind::Log1p => -1.0 / ((1.0 + t) * (1.0 + t)),
            Kind::Affine(..) => 0.0,
            Kind::Square => 2.0,
            Kind::Neg(f) => -f.d2(t),
            Kind::Compose(g, f) => {
                let u = f.eval(t);
                let df = f.d1(t);
                g.d2(u) * df * df + g.d1(u) * f.d2(t)
            }
        }
    }

    fn domain_error(&self, t: f64) -> Error {
        Error::Domain {
            function: self.name.clone(),
            value: t,
            domain: self.domain.to_string(),
        }
    }

    pub fn try_eval(&self, t: f64) -> Result<f64> {
        if self.domain.contains(t) {
            Ok(self.eval(t))
        } else {
            Err(self.domain_error(t))
        }
    }

    /// Derivatives are only offered on the open interior of the domain.
    pub fn try_d1(&self, t: f64) -> Result<f64> {
        if self.domain.contains_interior(t) {
            Ok(self.d1(t))
        } else {
            Err(self.domain_error(t))
        }
    }

    pub fn try_d2(&self, t: f64) -> Result<f64> {
        if self.domain.contains_interior(t) {
            Ok(self.d2(t))
        } else {
            Err(self.domain_error(t))
        }
    }

    /// Tangent line at `base`: `t ↦ f'(base)·t − base·f'(base) + f(base)`.
    pub fn tangent(&self, base: f64) -> Result<TangentLine> {
        let slope = self.try_d1(base)?;
        Ok(TangentLine {
            slope,
            intercept: self.eval(base) - base * slope,
            base,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TangentLine {
    pub slope: f64,
    pub intercept: f64,
    pub base: f64,
}

impl TangentLine {
    pub fn eval(&self, t: f64) -> f64 {
        self.slope * t + self.intercept
    }
}

struct Parser<'a> {
    spec: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, reason: &str) -> Error {
        Error::Parse {
            spec: self.spec.to_string(),
            pos: self.pos,
            reason: reason.to_string(),
        }
    }

    fn peek(&self) -> Option<char> {
        self.spec[self.pos..].chars().next()
    }

    fn peek_at(&self, offset: usize) -> Option<char> {
        self.spec[self.pos..].chars().nth(offset)
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            Ok(())
        } else {
            Err(self.error(&format!("expected `{c}`")))
        }
    }

    fn ident(&mut self) -> Result<&str> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_') {
            self.pos += 1;
        }
        if start == self.pos || !self.spec.as_bytes()[start].is_ascii_alphabetic() {
            self.pos = start;
            return Err(self.error("expected a function name"));
        }
        Ok(&self.spec[start..self.pos])
    }

    fn starts_number(c: Option<char>) -> bool {
        matches!(c, Some(c) if c.is_ascii_digit() || c == '-' || c == '+' || c == '.')
    }

    fn number(&mut self) -> Result<f64> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit() || matches!(c, '.' | 'e' | 'E' | '+' | '-'))
        {
            self.pos += 1;
        }
        self.spec[start..self.pos].parse::<f64>().map_err(|_| {
            self.pos = start;
            self.error("expected a number")
        })
    }

    fn function(&mut self) -> Result<ScalarFunction> {
        let name = self.ident()?.to_string();
        match name.as_str() {
            "neg" => {
                self.expect('(')?;
                let f = self.function()?;
                self.expect(')')?;
                Ok(f.negate())
            }
            "compose" => {
                self.expect('(')?;
                let outer = self.function()?;
                self.expect(',')?;
                let inner = self.function()?;
                self.expect(')')?;
                ScalarFunction::compose(&outer, &inner)
            }
            _ => {
                let mut params = Vec::new();
                if self.peek() == Some(':') {
                    self.pos += 1;
                    params.push(self.number()?);
                    while self.peek() == Some(',') && Self::starts_number(self.peek_at(1)) {
                        self.pos += 1;
                        params.push(self.number()?);
                    }
                }
                ScalarFunction::builtin(&name, &params)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    /// Central-difference check of `d1` against `eval` and `d2` against `d1`.
    fn fd_check(f: &ScalarFunction, lo: f64, hi: f64) {
        for k in 0..1000 {
            let t = lo + (hi - lo) * (k as f64 + 0.5) / 1000.0;
            let h = 1e-5 * (1.0 + t.abs());
            let fd1 = (f.eval(t + h) - f.eval(t - h)) / (2.0 * h);
            let fd2 = (f.d1(t + h) - f.d1(t - h)) / (2.0 * h);
            let d1 = f.d1(t);
            let d2 = f.d2(t);
            assert!(
                (fd1 - d1).abs() <= 1e-6f64.max(1e-6 * d1.abs()),
                "{} d1 at {t}: {d1} vs {fd1}",
                f.name()
            );
            assert!(
                (fd2 - d2).abs() <= 1e-6f64.max(1e-6 * d2.abs()),
                "{} d2 at {t}: {d2} vs {fd2}",
                f.name()
            );
            match f.monotone() {
                Monotone::StrictlyIncreasing => assert!(d1 > 0.0),
                Monotone::StrictlyDecreasing => assert!(d1 < 0.0),
            }
            match f.curvature() {
                Curvature::Concave => assert!(d2 <= 0.0),
                Curvature::Convex => assert!(d2 >= 0.0),
                Curvature::Linear => assert_eq!(d2, 0.0),
            }
        }
    }

    #[test]
    fn catalog_derivatives_match_finite_differences() {
        for spec in [
            "sqrt",
            "pow:0.3",
            "pow:2",
            "pow:2.5",
            "log1p",
            "affine:2,1",
            "affine:-1,5",
            "square",
        ] {
            let f = ScalarFunction::parse(spec).unwrap();
            fd_check(&f, 0.5, 10.0);
            fd_check(&f.negate(), 0.5, 10.0);
        }
        let ss = ScalarFunction::parse("compose(sqrt,sqrt)").unwrap();
        fd_check(&ss, 0.5, 16.0);
        let lp = ScalarFunction::parse("compose(log1p,pow:0.3)").unwrap();
        fd_check(&lp, 0.5, 16.0);
    }

    #[test]
    fn sqrt_at_four() {
        let f = ScalarFunction::builtin("sqrt", &[]).unwrap();
        assert_eq!(f.eval(4.0), 2.0);
        assert_eq!(f.d1(4.0), 0.25);
        assert_eq!(f.d2(4.0), -1.0 / 32.0);
        assert_eq!(f.curvature(), Curvature::Concave);
        assert_eq!(f.monotone(), Monotone::StrictlyIncreasing);
    }

    #[test]
    fn pow_two_and_affine_metadata() {
        let f = ScalarFunction::builtin("pow", &[2.0]).unwrap();
        assert_eq!(f.eval(3.0), 9.0);
        assert_eq!(f.curvature(), Curvature::Convex);
        assert!(f.is_increasing());
        assert_eq!(f.domain(), Domain::NONNEGATIVE);
        let a = ScalarFunction::builtin("affine", &[-1.0, 5.0]).unwrap();
        assert_eq!(a.monotone(), Monotone::StrictlyDecreasing);
    }

    #[test]
    fn builtin_rejects_bad_input() {
        assert!(matches!(
            ScalarFunction::builtin("pow", &[1.0]),
            Err(Error::InvalidParameter { .. })
        ));
        assert!(matches!(
            ScalarFunction::builtin("pow", &[-0.5]),
            Err(Error::InvalidParameter { .. })
        ));
        assert!(matches!(
            ScalarFunction::builtin("affine", &[0.0, 1.0]),
            Err(Error::InvalidParameter { .. })
        ));
        assert!(matches!(
            ScalarFunction::builtin("sqrt", &[1.0]),
            Err(Error::InvalidParameter { .. })
        ));
        assert!(matches!(
            ScalarFunction::builtin("exp", &[]),
            Err(Error::UnknownFunction(_))
        ));
    }

    #[test]
    fn derivatives_refused_at_zero() {
        let f = ScalarFunction::sqrt();
        assert_eq!(f.try_eval(0.0).unwrap(), 0.0);
        assert!(f.try_d1(0.0).is_err());
        assert!(f.try_d2(0.0).is_err());
        assert!(ScalarFunction::square().try_d1(0.0).is_err());
        assert!(f.try_eval(-1.0).is_err());
        assert!(f.tangent(0.0).is_err());
    }

    #[test]
    fn compose_sqrt_sqrt() {
        let s = ScalarFunction::sqrt();
        let ss = ScalarFunction::compose(&s, &s).unwrap();
        assert!(close(ss.eval(16.0), 2.0, 1e-15));
        // g'(f(16))·f'(16) = (1/4)·(1/8)
        assert!(close(ss.d1(16.0), 1.0 / 32.0, 1e-15));
        assert!(close(ss.d2(1.0), -3.0 / 16.0, 1e-15));
        assert_eq!(ss.curvature(), Curvature::Concave);
        assert!(ss.is_increasing());
        assert_eq!(ss.name(), "compose(sqrt,sqrt)");
    }

    #[test]
    fn compose_with_identity_is_noop() {
        let id = ScalarFunction::affine(1.0, 0.0).unwrap();
        let f = ScalarFunction::log1p();
        assert_eq!(ScalarFunction::compose(&f, &id).unwrap(), f);
        assert_eq!(ScalarFunction::compose(&id, &f).unwrap(), f);
    }

    #[test]
    fn compose_rejects_undetermined_curvature_and_bad_range() {
        let err = ScalarFunction::compose(&ScalarFunction::square(), &ScalarFunction::sqrt())
            .unwrap_err();
        assert!(matches!(err, Error::UnsupportedComposition { .. }));
        let err =
            ScalarFunction::compose(&ScalarFunction::sqrt(), &ScalarFunction::sqrt().negate())
                .unwrap_err();
        assert!(matches!(err, Error::UnsupportedComposition { .. }));
    }

    #[test]
    fn compose_with_affine_inner_restricts_domain() {
        let f = ScalarFunction::parse("compose(sqrt,affine:-1,5)").unwrap();
        let d = f.domain();
        assert_eq!((d.lo, d.hi, d.hi_closed), (f64::NEG_INFINITY, 5.0, true));
        assert_eq!(f.eval(1.0), 2.0);
        assert!(f.try_eval(6.0).is_err());
    }

    #[test]
    fn negate_examples() {
        let s = ScalarFunction::sqrt();
        let n = s.negate();
        assert_eq!(n.curvature(), Curvature::Convex);
        assert_eq!(n.monotone(), Monotone::StrictlyDecreasing);
        assert_eq!(n.eval(4.0), -2.0);
        assert_eq!(n.d2(4.0), 1.0 / 32.0);
        assert_eq!(n.negate(), s);
        let a = ScalarFunction::affine(2.0, 3.0).unwrap();
        assert_eq!(a.negate(), ScalarFunction::affine(-2.0, -3.0).unwrap());
        let p = ScalarFunction::pow(0.3).unwrap();
        for t in [0.5, 1.0, 7.0] {
            assert_eq!(p.negate().negate().eval(t), p.eval(t));
        }
    }

    #[test]
    fn tangent_examples() {
        let s = ScalarFunction::sqrt();
        let t1 = s.tangent(1.0).unwrap();
        assert_eq!((t1.slope, t1.intercept), (0.5, 0.5));
        assert_eq!(t1.eval(1.0), 1.0);
        let t4 = s.tangent(4.0).unwrap();
        assert_eq!((t4.slope, t4.intercept), (0.25, 1.0));
        assert_eq!(t4.eval(4.0), 2.0);
        for k in 0..200 {
            let t = 0.05 * k as f64;
            assert!(t4.eval(t) >= s.eval(t));
        }
    }

    #[test]
    fn parse_round_trips_names() {
        for spec in [
            "sqrt",
            "pow:0.3",
            "log1p",
            "affine:2,1",
            "square",
            "neg(sqrt)",
            "compose(sqrt,sqrt)",
            "compose(affine:2,1,sqrt)",
            "compose(log1p,compose(sqrt,pow:0.5))",
            "neg(compose(affine:1,-3.5,square))",
        ] {
            let f = ScalarFunction::parse(spec).unwrap();
            assert_eq!(f.name(), spec);
            assert_eq!(ScalarFunction::parse(f.name()).unwrap(), f);
        }
    }

    #[test]
    fn parse_errors_carry_position() {
        assert!(matches!(
            ScalarFunction::parse("sqrt)"),
            Err(Error::Parse { pos: 4, .. })
        ));
        assert!(matches!(
            ScalarFunction::parse("compose(sqrt"),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            ScalarFunction::parse("pow:x"),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            ScalarFunction::parse("pow:1"),
            Err(Error::InvalidParameter { .. })
        ));
        assert!(matches!(
            ScalarFunction::parse("cosh"),
            Err(Error::UnknownFunction(_))
        ));
        assert!(matches!(
            ScalarFunction::parse(""),
            Err(Error::Parse { .. })
        ));
    }
}
