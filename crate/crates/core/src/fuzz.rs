//! Seeded fuzz campaigns: tangent/sphere agreement on random pairs, and the
//! contrapositive search for a violating witness on random unequal pairs.
//!
//! Every case is generated from its own ChaCha stream, so a report depends
//! only on the configuration, never on thread scheduling.

use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::antisymmetry::find_violation;
use crate::error::{Error, Result};
use crate::hermitian::{HermitianMatrix, MatrixFile};
use crate::jensen::{
    check_relation_sphere, check_relation_tangent, Direction, RelationOptions, RelationProblem,
};
use crate::random::{hermitian_in_box, stream_rng, with_spectrum};
use crate::report::{to_json, VERSION};
use crate::scalar::ScalarFunction;

/// Streams at or above this offset feed the contrapositive suite.
const CONTRAPOSITIVE_STREAM: u64 = 1 << 32;
pub const MIN_DISTANCE: f64 = 0.1;

#[derive(Debug, Clone, Serialize)]
pub struct FuzzConfig {
    pub count: usize,
    /// Inclusive dimension range.
    pub dims: (usize, usize),
    pub seed: u64,
    /// Box for the eigenvalues of generated matrices.
    pub spectrum: (f64, f64),
    pub restarts: usize,
}

impl Default for FuzzConfig {
    fn default() -> Self {
        Self {
            count: 200,
            dims: (2, 6),
            seed: 0,
            spectrum: (0.5, 10.0),
            restarts: crate::jensen::DEFAULT_RESTARTS,
        }
    }
}

impl FuzzConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.dims;
        if lo == 0 || lo > hi {
            return Err(Error::Precondition(format!(
                "bad dimension range {lo}..{hi}"
            )));
        }
        let (s, t) = self.spectrum;
        if !(s > 0.0 && s < t && t.is_finite()) {
            return Err(Error::Precondition(format!("bad spectrum box [{s}, {t}]")));
        }
        if self.restarts == 0 {
            return Err(Error::Precondition("restarts must be positive".into()));
        }
        Ok(())
    }
}

/// The relation functions cycled through by the campaigns.
pub fn campaign_function(index: usize) -> ScalarFunction {
    match index % 3 {
        0 => ScalarFunction::sqrt(),
        1 => ScalarFunction::pow(0.3).expect("valid exponent"),
        _ => ScalarFunction::log1p(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Agreement,
    Contrapositive,
}

/// Everything needed to rerun one case.
#[derive(Debug, Clone, Serialize)]
pub struct FuzzCase {
    pub suite: Suite,
    pub index: usize,
    pub function: ScalarFunction,
    pub direction: Direction,
    pub seed: u64,
    pub restarts: usize,
    pub x: MatrixFile,
    pub y: MatrixFile,
    #[serde(skip)]
    pub xm: HermitianMatrix,
    #[serde(skip)]
    pub ym: HermitianMatrix,
}

fn random_dim<R: Rng>(cfg: &FuzzConfig, rng: &mut R) -> usize {
    rng.random_range(cfg.dims.0..=cfg.dims.1)
}

/// Pair `(A, B)` for the agreement suite. The pairing mode cycles through
/// `B = A`, `B = A + δI`, `A = B + δI` and independent draws, so both verdicts
/// occur often.
pub fn agreement_case(cfg: &FuzzConfig, index: usize) -> FuzzCase {
    let mut rng = stream_rng(cfg.seed, index as u64);
    let dim = random_dim(cfg, &mut rng);
    let (lo, hi) = cfg.spectrum;
    let a = hermitian_in_box(dim, lo, hi, &mut rng);
    let delta = 0.05 + 0.95 * rng.random::<f64>();
    let (x, y) = match (index / 3) % 4 {
        0 => (a.clone(), a),
        1 => (a.clone(), a.shift(delta)),
        2 => (a.shift(delta), a),
        _ => (a, hermitian_in_box(dim, lo, hi, &mut rng)),
    };
    FuzzCase {
        suite: Suite::Agreement,
        index,
        function: campaign_function(index),
        direction: Direction::ConcaveLe,
        seed: cfg.seed,
        restarts: cfg.restarts,
        x: x.to_file(),
        y: y.to_file(),
        xm: x,
        ym: y,
    }
}

/// Unequal pair `(X, Y)` with `‖X − Y‖ ≥ 0.1`, both spectra in the box.
/// Even indices perturb the spectrum of `X` in its own eigenbasis (so `X`
/// and `Y` commute), odd indices draw `Y` independently.
pub fn contrapositive_case(cfg: &FuzzConfig, index: usize) -> FuzzCase {
    let mut rng = stream_rng(cfg.seed, CONTRAPOSITIVE_STREAM + index as u64);
    let dim = random_dim(cfg, &mut rng);
    let (lo, hi) = cfg.spectrum;
    let (x, y) = loop {
        let mut spec: Vec<f64> = (0..dim)
            .map(|_| lo + (hi - lo) * rng.random::<f64>())
            .collect();
        spec.sort_by(f64::total_cmp);
        let x = with_spectrum(&spec, &mut rng);
        let y = if index.is_multiple_of(2) {
            let moved: Vec<f64> = spec
                .iter()
                .map(|&s| {
                    let step = (0.1 + 0.9 * rng.random::<f64>())
                        * if rng.random::<bool>() { 1.0 } else { -1.0 };
                    (s + step).clamp(lo, hi)
                })
                .collect();
            x.spectral()
                .expect("generated matrix is Hermitian")
                .rebuild(&moved)
        } else {
            hermitian_in_box(dim, lo, hi, &mut rng)
        };
        if x.sub(&y).norm() >= MIN_DISTANCE {
            break (x, y);
        }
    };
    FuzzCase {
        suite: Suite::Contrapositive,
        index,
        function: campaign_function(index),
        direction: Direction::ConcaveLe,
        seed: cfg.seed,
        restarts: cfg.restarts,
        x: x.to_file(),
        y: y.to_file(),
        xm: x,
        ym: y,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AgreementOutcome {
    pub index: usize,
    pub dim: usize,
    pub function: ScalarFunction,
    pub tangent_holds: bool,
    pub sphere_holds: bool,
    pub tangent_margin: f64,
    pub sphere_margin: f64,
    pub tolerance: f64,
    pub witnesses_valid: bool,
}

impl AgreementOutcome {
    pub fn agree(&self) -> bool {
        self.tangent_holds == self.sphere_holds
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ContrapositiveOutcome {
    pub index: usize,
    pub dim: usize,
    pub function: ScalarFunction,
    pub distance: f64,
    pub found: bool,
    /// Recomputed `lhs − rhs` of the witness in its worse ordering.
    pub violation: Option<f64>,
    pub tolerance: Option<f64>,
    pub verified: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Discrepancy {
    pub reason: String,
    pub case: FuzzCase,
}

#[derive(Debug, Clone, Serialize)]
pub struct FuzzReport {
    pub version: &'static str,
    pub seed: u64,
    pub config: FuzzConfig,
    pub agreement: Vec<AgreementOutcome>,
    pub contrapositive: Vec<ContrapositiveOutcome>,
    pub discrepancies: Vec<Discrepancy>,
}

impl FuzzReport {
    pub fn passed(&self) -> bool {
        self.discrepancies.is_empty()
    }

    pub fn to_json(&self) -> String {
        to_json(self)
    }
}

/// Unit norm within 1e-12 and reported values reproduced within 1e-12
/// relative.
fn witness_reproduces(problem: &RelationProblem, w: &crate::jensen::Witness) -> bool {
    let xi = w.as_vector();
    if (xi.norm() - 1.0).abs() > 1e-12 {
        return false;
    }
    let again = problem.witness(&xi);
    let rel = |p: f64, q: f64| (p - q).abs() <= 1e-12 * (1.0 + p.abs().max(q.abs()));
    rel(again.lhs, w.lhs) && rel(again.rhs, w.rhs)
}

pub fn run_agreement(case: &FuzzCase) -> Result<AgreementOutcome> {
    let h = &case.function;
    let opts = RelationOptions {
        seed: case.seed,
        restarts: case.restarts,
        ..RelationOptions::default()
    };
    let t = check_relation_tangent(h, &case.xm, &case.ym, &opts)?;
    let s = check_relation_sphere(h, &case.xm, &case.ym, &opts)?;
    let problem = RelationProblem::new(h, &case.xm, &case.ym)?;
    let valid = [&t, &s].iter().all(|v| match (&v.witness, v.holds) {
        (Some(w), false) => w.violation() > v.tolerance && witness_reproduces(&problem, w),
        (None, false) => false,
        _ => true,
    });
    Ok(AgreementOutcome {
        index: case.index,
        dim: case.xm.dim(),
        function: h.clone(),
        tangent_holds: t.holds,
        sphere_holds: s.holds,
        tangent_margin: t.margin,
        sphere_margin: s.margin,
        tolerance: t.tolerance,
        witnesses_valid: valid,
    })
}

pub fn run_contrapositive(case: &FuzzCase) -> Result<ContrapositiveOutcome> {
    let h = &case.function;
    let found = find_violation(
        h,
        &case.xm,
        &case.ym,
        case.direction,
        case.seed,
        case.restarts,
    )?;
    let (violation, tolerance, verified) = match &found {
        Some(v) => {
            let hn = crate::jensen::normalize(h, case.direction)?;
            let xi = v.witness.as_ref().map(|w| w.as_vector());
            let worst = match &xi {
                Some(xi) => {
                    let p = RelationProblem::new(&hn, &case.xm, &case.ym)?.phi(xi);
                    let q = RelationProblem::new(&hn, &case.ym, &case.xm)?.phi(xi);
                    Some(-p.min(q))
                }
                None => None,
            };
            let ok = worst.is_some_and(|w| w > v.tolerance);
            (worst, Some(v.tolerance), ok)
        }
        None => (None, None, false),
    };
    Ok(ContrapositiveOutcome {
        index: case.index,
        dim: case.xm.dim(),
        function: h.clone(),
        distance: case.xm.sub(&case.ym).norm(),
        found: found.is_some(),
        violation,
        tolerance,
        verified,
    })
}

/// Runs `count` cases of each suite. Cases run in parallel; output order is
/// by index.
pub fn run_fuzz(cfg: &FuzzConfig) -> Result<FuzzReport> {
    cfg.validate()?;
    let agreement: Vec<(FuzzCase, AgreementOutcome)> = (0..cfg.count)
        .into_par_iter()
        .map(|i| {
            let case = agreement_case(cfg, i);
            run_agreement(&case).map(|o| (case, o))
        })
        .collect::<Result<_>>()?;
    let contrapositive: Vec<(FuzzCase, ContrapositiveOutcome)> = (0..cfg.count)
        .into_par_iter()
        .map(|i| {
            let case = contrapositive_case(cfg, i);
            run_contrapositive(&case).map(|o| (case, o))
        })
        .collect::<Result<_>>()?;

    let mut discrepancies = Vec::new();
    for (case, o) in &agreement {
        let reason = if !o.agree() {
            Some(format!(
                "tangent holds = {}, sphere holds = {} (margins {:e}, {:e})",
                o.tangent_holds, o.sphere_holds, o.tangent_margin, o.sphere_margin
            ))
        } else if !o.witnesses_valid {
            Some("witness does not reproduce its reported violation".to_string())
        } else {
            None
        };
        if let Some(reason) = reason {
            discrepancies.push(Discrepancy {
                reason,
                case: case.clone(),
            });
        }
    }
    for (case, o) in &contrapositive {
        if !o.verified {
            let reason = if o.found {
                "witness violation not above tolerance".to_string()
            } else {
                format!(
                    "no violation found within budget (‖X − Y‖ = {:e})",
                    o.distance
                )
            };
            discrepancies.push(Discrepancy {
                reason,
                case: case.clone(),
            });
        }
    }

    Ok(FuzzReport {
        version: VERSION,
        seed: cfg.seed,
        config: cfg.clone(),
        agreement: agreement.into_iter().map(|(_, o)| o).collect(),
        contrapositive: contrapositive.into_iter().map(|(_, o)| o).collect(),
        discrepancies,
    })
}

/// Writes `<stem>-x.json`, `<stem>-y.json` and `<stem>.json` (metadata plus a
/// rerun command) for one discrepancy.
pub fn write_case_files(dir: &Path, d: &Discrepancy) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let suite = match d.case.suite {
        Suite::Agreement => "agreement",
        Suite::Contrapositive => "contrapositive",
    };
    let stem = format!("case-{suite}-{:04}", d.case.index);
    let x_path = dir.join(format!("{stem}-x.json"));
    let y_path = dir.join(format!("{stem}-y.json"));
    d.case.xm.save(&x_path)?;
    d.case.ym.save(&y_path)?;
    let one_sided = if d.case.suite == Suite::Agreement {
        " --one-sided"
    } else {
        ""
    };
    let command = format!(
        "jensen-order check --f {} --dir {} --seed {} --restarts {}{one_sided} {} {}",
        d.case.function.name(),
        d.case.direction,
        d.case.seed,
        d.case.restarts,
        x_path.display(),
        y_path.display()
    );
    #[derive(Serialize)]
    struct Meta<'a> {
        version: &'static str,
        seed: u64,
        reason: &'a str,
        command: String,
        case: &'a FuzzCase,
    }
    let meta_path = dir.join(format!("{stem}.json"));
    fs::write(
        &meta_path,
        to_json(&Meta {
            version: VERSION,
            seed: d.case.seed,
            reason: &d.reason,
            command,
            case: &d.case,
        }),
    )?;
    Ok(vec![meta_path, x_path, y_path])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(count: usize, dims: (usize, usize)) -> FuzzConfig {
        FuzzConfig {
            count,
            dims,
            restarts: 16,
            ..FuzzConfig::default()
        }
    }

    #[test]
    fn cases_are_deterministic() {
        let cfg = small(4, (2, 4));
        for i in 0..4 {
            assert_eq!(agreement_case(&cfg, i).xm, agreement_case(&cfg, i).xm);
            assert_eq!(
                contrapositive_case(&cfg, i).ym,
                contrapositive_case(&cfg, i).ym
            );
        }
    }

    #[test]
    fn contrapositive_pairs_are_separated_and_in_box() {
        let cfg = small(20, (1, 5));
        for i in 0..20 {
            let c = contrapositive_case(&cfg, i);
            assert!(c.xm.sub(&c.ym).norm() >= MIN_DISTANCE);
            for m in [&c.xm, &c.ym] {
                let ev = m.eigenvalues().unwrap();
                assert!(ev[0] >= 0.5 - 1e-9 && ev[ev.len() - 1] <= 10.0 + 1e-9);
            }
        }
    }

    #[test]
    fn scalar_campaign_is_consistent() {
        let r = run_fuzz(&small(6, (1, 1))).unwrap();
        assert!(r.passed(), "{:?}", r.discrepancies);
        assert_eq!(r.agreement.len(), 6);
    }

    #[test]
    fn small_campaign_passes_and_is_reproducible() {
        let cfg = small(8, (2, 4));
        let a = run_fuzz(&cfg).unwrap().to_json();
        let b = run_fuzz(&cfg).unwrap().to_json();
        assert_eq!(a, b);
        assert!(a.contains("\"version\""));
    }

    #[test]
    fn bad_config_is_rejected() {
        assert!(run_fuzz(&small(1, (0, 2))).is_err());
        assert!(run_fuzz(&small(1, (3, 2))).is_err());
    }

    #[test]
    fn case_files_round_trip() {
        let dir = std::env::temp_dir().join(format!("jo-fuzz-{}", std::process::id()));
        let d = Discrepancy {
            reason: "synthetic".into(),
            case: contrapositive_case(&small(1, (2, 2)), 0),
        };
        let paths = write_case_files(&dir, &d).unwrap();
        assert_eq!(HermitianMatrix::load(&paths[1]).unwrap(), d.case.xm);
        let meta = std::fs::read_to_string(&paths[0]).unwrap();
        assert!(meta.contains("jensen-order check --f sqrt"));
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
