//! `jensen-order` command-line front end.
//!
//! Exit codes: 0 when the requested relation or equality holds, 2 when it is
//! violated, 1 on usage or data errors, 3 when the numerics are inconclusive.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use jensen_order::antisymmetry::{decide_equal, Conclusion, PeelOptions, PeelingTrace};
use jensen_order::fuzz::{run_fuzz, write_case_files, FuzzConfig, FuzzReport};
use jensen_order::jensen::{self, check_relation_sphere, check_relation_tangent};
use jensen_order::report::{format_sig17 as sig, to_json, VERSION};
use jensen_order::sandwich::{
    check_sandwich, discretize_sweep, kernel_match, remark36_lower_bound, remark36_ratio,
    DiscretizationReport, SandwichVerdict,
};
use jensen_order::{Direction, HermitianMatrix, RelationOptions, RelationVerdict, ScalarFunction};

const EXIT_OK: u8 = 0;
const EXIT_ERROR: u8 = 1;
const EXIT_VIOLATED: u8 = 2;
const EXIT_INCONCLUSIVE: u8 = 3;

#[derive(Parser)]
#[command(
    name = "jensen-order",
    version,
    about = "Jensen-order relations between Hermitian matrices"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide the dual vector-state Jensen relations for f between X and Y
    Check(CheckArgs),
    /// Certify X = Y by projection peeling, or report a violated premise
    DecideEqual(DecideArgs),
    /// Check the two-sided composed hypothesis and the kernel step
    Sandwich(SandwichArgs),
    /// Audit the discretization bounds over a list of partition sizes
    Discretize(DiscretizeArgs),
    /// Tabulate the quadratic-bound ratio for f = g = sqrt as λ shrinks
    Remark36(Remark36Args),
    /// Seeded fuzz campaign: method agreement and contrapositive search
    Fuzz(FuzzArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Pretty,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Tangent,
    Sphere,
}

#[derive(Args)]
struct Output {
    /// Write the report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args)]
struct Pair {
    /// Matrix file for X
    x: PathBuf,
    /// Matrix file for Y
    y: PathBuf,
}

#[derive(Args)]
struct RelationArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Sphere-oracle restarts
    #[arg(long, default_value_t = jensen::DEFAULT_RESTARTS, value_parser = positive_usize)]
    restarts: usize,
    /// λ-grid size of the tangent scan
    #[arg(long, default_value_t = jensen::DEFAULT_GRID_POINTS, value_parser = positive_usize)]
    grid_points: usize,
}

impl RelationArgs {
    fn options(&self) -> RelationOptions {
        RelationOptions {
            seed: self.seed,
            restarts: self.restarts,
            grid_points: self.grid_points,
            ..RelationOptions::default()
        }
    }
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long = "f")]
    f: String,
    #[arg(long = "dir", default_value = "concave-le")]
    dir: String,
    /// Only check ⟨f(X)ξ,ξ⟩ against f(⟨Yξ,ξ⟩), not the reverse ordering
    #[arg(long)]
    one_sided: bool,
    #[arg(long, value_enum, default_value = "tangent")]
    method: MethodArg,
    #[command(flatten)]
    relation: RelationArgs,
    #[command(flatten)]
    pair: Pair,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct DecideArgs {
    #[arg(long = "f")]
    f: String,
    #[arg(long = "dir", default_value = "concave-le")]
    dir: String,
    /// Relative tolerance for the final ‖X − Y‖
    #[arg(long, value_parser = positive_f64)]
    tau_eq_rel: Option<f64>,
    /// Relative tolerance for the per-step norm comparison
    #[arg(long, value_parser = positive_f64)]
    tau_norm_rel: Option<f64>,
    #[command(flatten)]
    relation: RelationArgs,
    #[command(flatten)]
    pair: Pair,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct SandwichArgs {
    #[arg(long = "f")]
    f: String,
    #[arg(long = "g")]
    g: String,
    #[command(flatten)]
    relation: RelationArgs,
    #[command(flatten)]
    pair: Pair,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct DiscretizeArgs {
    #[arg(long = "f", default_value = "sqrt")]
    f: String,
    #[arg(long = "g", default_value = "sqrt")]
    g: String,
    #[arg(long = "a")]
    a: f64,
    #[arg(long = "b")]
    b: f64,
    /// Comma-separated partition sizes
    #[arg(long, value_delimiter = ',', required = true, value_parser = positive_usize)]
    n_list: Vec<usize>,
    #[command(flatten)]
    pair: Pair,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct Remark36Args {
    #[arg(long = "t", default_value_t = 1.0)]
    t: f64,
    /// Comma-separated λ values
    #[arg(long, value_delimiter = ',', default_value = "1e-2,1e-4,1e-6,1e-8")]
    lambdas: Vec<f64>,
    /// Also report λ_min(2(λX)^{1/2} − λI) for this matrix
    #[arg(long = "x")]
    x: Option<PathBuf>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct FuzzArgs {
    #[arg(long, default_value_t = 200)]
    count: usize,
    /// Inclusive dimension range, e.g. 2..6
    #[arg(long, default_value = "2..6", value_parser = parse_range)]
    dims: (usize, usize),
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = jensen::DEFAULT_RESTARTS, value_parser = positive_usize)]
    restarts: usize,
    /// Eigenvalue box, e.g. 0.5,10
    #[arg(long, default_value = "0.5,10", value_parser = parse_box)]
    spectrum: (f64, f64),
    /// Directory for reproducible discrepancy cases
    #[arg(long, default_value = "fuzz-cases")]
    cases_dir: PathBuf,
    #[command(flatten)]
    output: Output,
}

fn positive_usize(s: &str) -> Result<usize, String> {
    match s.trim().parse::<usize>() {
        Ok(0) => Err("must be positive".into()),
        Ok(n) => Ok(n),
        Err(e) => Err(e.to_string()),
    }
}

fn positive_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x > 0.0 && x.is_finite() => Ok(x),
        Ok(_) => Err("must be a positive finite number".into()),
        Err(e) => Err(e.to_string()),
    }
}

fn parse_range(s: &str) -> Result<(usize, usize), String> {
    let (lo, hi) = s.split_once("..").ok_or("expected LO..HI")?;
    let lo: usize = lo.trim().parse().map_err(|e| format!("{e}"))?;
    let hi: usize = hi.trim().parse().map_err(|e| format!("{e}"))?;
    if lo == 0 || lo > hi {
        return Err(format!("need 1 ≤ LO ≤ HI, got {lo}..{hi}"));
    }
    Ok((lo, hi))
}

fn parse_box(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(',').ok_or("expected LO,HI")?;
    let lo: f64 = lo.trim().parse().map_err(|e| format!("{e}"))?;
    let hi: f64 = hi.trim().parse().map_err(|e| format!("{e}"))?;
    if !(lo > 0.0 && lo < hi && hi.is_finite()) {
        return Err(format!("need 0 < LO < HI, got {lo},{hi}"));
    }
    Ok((lo, hi))
}

type Failure = String;

fn load(path: &Path) -> Result<HermitianMatrix, Failure> {
    HermitianMatrix::load(path).map_err(|e| format!("cannot load matrix {}: {e}", path.display()))
}

fn function(spec: &str) -> Result<ScalarFunction, Failure> {
    ScalarFunction::parse(spec).map_err(|e| format!("bad function spec `{spec}`: {e}"))
}

fn direction(s: &str) -> Result<Direction, Failure> {
    s.parse().map_err(|e: jensen_order::Error| e.to_string())
}

fn emit(output: &Output, text: &str) -> Result<(), Failure> {
    match &output.out {
        Some(path) => {
            fs::write(path, text).map_err(|e| format!("cannot write {}: {e}", path.display()))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    version: &'static str,
    command: &'a str,
    seed: u64,
    #[serde(flatten)]
    body: T,
}

fn envelope<T: Serialize>(command: &str, seed: u64, body: T) -> String {
    to_json(&Envelope {
        version: VERSION,
        command,
        seed,
        body,
    })
}

fn verdict_line(label: &str, v: &RelationVerdict) -> String {
    let mut s = format!(
        "{label}: {} (margin {}, tolerance {})",
        if v.holds { "holds" } else { "VIOLATED" },
        sig(v.margin),
        sig(v.tolerance)
    );
    if let Some(w) = &v.witness {
        let entries: Vec<String> = w
            .vector
            .iter()
            .map(|z| format!("({}, {})", sig(z.re), sig(z.im)))
            .collect();
        let _ = write!(
            s,
            "\n  witness ξ = [{}]\n  lhs = {}, rhs = {}",
            entries.join(", "),
            sig(w.lhs),
            sig(w.rhs)
        );
    }
    s
}

fn verdict_csv(rows: &[(&str, &RelationVerdict)]) -> String {
    let mut s =
        String::from("ordering,holds,margin,tolerance,lambda_star,witness_lhs,witness_rhs\n");
    for (label, v) in rows {
        let opt = |x: Option<f64>| x.map(sig).unwrap_or_default();
        let _ = writeln!(
            s,
            "{label},{},{},{},{},{},{}",
            v.holds,
            sig(v.margin),
            sig(v.tolerance),
            opt(v.lambda_star),
            opt(v.witness.as_ref().map(|w| w.lhs)),
            opt(v.witness.as_ref().map(|w| w.rhs)),
        );
    }
    s
}

#[derive(Serialize)]
struct CheckReport<'a> {
    function: &'a ScalarFunction,
    direction: Direction,
    one_sided: bool,
    holds: bool,
    x_then_y: &'a RelationVerdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    y_then_x: Option<&'a RelationVerdict>,
}

fn cmd_check(args: &CheckArgs) -> Result<u8, Failure> {
    let f = function(&args.f)?;
    let dir = direction(&args.dir)?;
    let x = load(&args.pair.x)?;
    let y = load(&args.pair.y)?;
    let h = jensen::normalize(&f, dir).map_err(|e| e.to_string())?;
    let opts = args.relation.options();
    let run = |a: &HermitianMatrix, b: &HermitianMatrix| match args.method {
        MethodArg::Tangent => check_relation_tangent(&h, a, b, &opts),
        MethodArg::Sphere => check_relation_sphere(&h, a, b, &opts),
    };
    let xy = run(&x, &y).map_err(|e| e.to_string())?;
    let yx = if args.one_sided {
        None
    } else {
        Some(run(&y, &x).map_err(|e| e.to_string())?)
    };
    let holds = xy.holds && yx.as_ref().is_none_or(|v| v.holds);
    let text = match args.output.format.unwrap_or(Format::Json) {
        Format::Json => envelope(
            "check",
            args.relation.seed,
            CheckReport {
                function: &f,
                direction: dir,
                one_sided: args.one_sided,
                holds,
                x_then_y: &xy,
                y_then_x: yx.as_ref(),
            },
        ),
        Format::Csv => {
            let mut rows = vec![("x_then_y", &xy)];
            if let Some(v) = &yx {
                rows.push(("y_then_x", v));
            }
            verdict_csv(&rows)
        }
        Format::Pretty => {
            let mut s = format!(
                "f = {}, direction {dir}, seed {}\n",
                f.name(),
                args.relation.seed
            );
            let _ = writeln!(s, "{}", verdict_line("X then Y", &xy));
            if let Some(v) = &yx {
                let _ = writeln!(s, "{}", verdict_line("Y then X", v));
            }
            s
        }
    };
    emit(&args.output, &text)?;
    Ok(if holds { EXIT_OK } else { EXIT_VIOLATED })
}

fn trace_table(trace: &PeelingTrace) -> String {
    let mut s = format!(
        "f = {}, direction {}, shift {}\n{:>5} {:>4} {:>4} {:>24} {:>24} {:>24} {:>24} {:>24}  status\n",
        trace.function,
        trace.direction,
        sig(trace.shift),
        "level",
        "dim",
        "rank",
        "norm X",
        "norm Y",
        "commutation",
        "factor",
        "equality"
    );
    for st in &trace.steps {
        let _ = writeln!(
            s,
            "{:>5} {:>4} {:>4} {:>24} {:>24} {:>24} {:>24} {:>24}  {:?}",
            st.level,
            st.subspace_dim,
            st.rank,
            sig(st.norms.0),
            sig(st.norms.1),
            sig(st.commutation_residual),
            sig(st.factor_residual),
            sig(st.equality_residual),
            st.status
        );
    }
    let conclusion = match &trace.conclusion {
        Conclusion::Equal => "EQUAL".to_string(),
        Conclusion::PremiseViolated { witness } => format!(
            "PREMISE_VIOLATED\n{}",
            verdict_line("witness verdict", witness)
        ),
        Conclusion::ToleranceExceeded { max_residual } => {
            format!("TOLERANCE_EXCEEDED (max residual {})", sig(*max_residual))
        }
    };
    let _ = writeln!(
        s,
        "‖X − Y‖ = {} (τ_eq {})\nconclusion: {conclusion}",
        sig(trace.difference_norm),
        sig(trace.tau_eq)
    );
    s
}

fn cmd_decide_equal(args: &DecideArgs) -> Result<u8, Failure> {
    let f = function(&args.f)?;
    let dir = direction(&args.dir)?;
    let x = load(&args.pair.x)?;
    let y = load(&args.pair.y)?;
    let mut opts = PeelOptions {
        relation: args.relation.options(),
        ..PeelOptions::default()
    };
    if let Some(t) = args.tau_eq_rel {
        opts.tau_eq_rel = t;
    }
    if let Some(t) = args.tau_norm_rel {
        opts.tau_norm_rel = t;
    }
    let trace = decide_equal(&f, &x, &y, dir, &opts).map_err(|e| e.to_string())?;
    let json = envelope("decide-equal", args.relation.seed, &trace);
    let text = match args.output.format.unwrap_or(Format::Json) {
        Format::Json => json,
        Format::Pretty => format!("{}\n{json}", trace_table(&trace)),
        Format::Csv => {
            let mut s = String::from(
                "level,subspace_dim,rank,norm_x,norm_y,norm_gap,commutation_residual,factor_residual,equality_residual,status\n",
            );
            for st in &trace.steps {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{},{},{},{:?}",
                    st.level,
                    st.subspace_dim,
                    st.rank,
                    sig(st.norms.0),
                    sig(st.norms.1),
                    sig(st.norm_gap),
                    sig(st.commutation_residual),
                    sig(st.factor_residual),
                    sig(st.equality_residual),
                    st.status
                );
            }
            s
        }
    };
    emit(&args.output, &text)?;
    Ok(match trace.conclusion {
        Conclusion::Equal => EXIT_OK,
        Conclusion::PremiseViolated { .. } => EXIT_VIOLATED,
        Conclusion::ToleranceExceeded { .. } => EXIT_INCONCLUSIVE,
    })
}

#[derive(Serialize)]
struct SandwichReport<'a> {
    f: &'a ScalarFunction,
    g: &'a ScalarFunction,
    holds: bool,
    kernel_match: bool,
    #[serde(flatten)]
    verdict: &'a SandwichVerdict,
}

fn cmd_sandwich(args: &SandwichArgs) -> Result<u8, Failure> {
    let f = function(&args.f)?;
    let g = function(&args.g)?;
    let x = load(&args.pair.x)?;
    let y = load(&args.pair.y)?;
    let v = check_sandwich(&f, &g, &x, &y, &args.relation.options()).map_err(|e| e.to_string())?;
    let km = kernel_match(&x, &y).map_err(|e| e.to_string())?;
    let text = match args.output.format.unwrap_or(Format::Json) {
        Format::Json => envelope(
            "sandwich",
            args.relation.seed,
            SandwichReport {
                f: &f,
                g: &g,
                holds: v.holds(),
                kernel_match: km,
                verdict: &v,
            },
        ),
        Format::Csv => verdict_csv(&[("left", &v.left), ("right", &v.right)]),
        Format::Pretty => format!(
            "f = {}, g = {}\n{}\n{}\nkernel match: {km}\n",
            f.name(),
            g.name(),
            verdict_line("left  ⟨(g∘f)(X)ξ,ξ⟩ ≤ g(⟨f(Y)ξ,ξ⟩)", &v.left),
            verdict_line("right ⟨f(Y)ξ,ξ⟩ ≤ f(⟨Xξ,ξ⟩)", &v.right)
        ),
    };
    emit(&args.output, &text)?;
    Ok(if v.holds() { EXIT_OK } else { EXIT_VIOLATED })
}

#[derive(Serialize)]
struct DiscretizeSweep<'a> {
    pass: bool,
    reports: &'a [DiscretizationReport],
}

fn cmd_discretize(args: &DiscretizeArgs) -> Result<u8, Failure> {
    if args.a <= 0.0 {
        return Err(format!(
            "--a must be positive (got {}): the lower endpoint has to stay away from 0, because the \
             quadratic tangent-gap constant c is unbounded there (see the remark36 command)",
            args.a
        ));
    }
    let f = function(&args.f)?;
    let g = function(&args.g)?;
    let x = load(&args.pair.x)?;
    let y = load(&args.pair.y)?;
    let reports = discretize_sweep(&f, &g, &x, &y, args.a, args.b, &args.n_list)
        .map_err(|e| e.to_string())?;
    let pass = reports.iter().all(DiscretizationReport::pass);
    let text = match args.output.format.unwrap_or(Format::Csv) {
        Format::Csv | Format::Pretty => {
            let mut s = format!("{}\n", DiscretizationReport::CSV_HEADER);
            for r in &reports {
                s.push_str(&r.csv_row());
                s.push('\n');
            }
            s
        }
        Format::Json => envelope(
            "discretize",
            0,
            DiscretizeSweep {
                pass,
                reports: &reports,
            },
        ),
    };
    emit(&args.output, &text)?;
    Ok(if pass { EXIT_OK } else { EXIT_VIOLATED })
}

#[derive(Serialize)]
struct RatioRow {
    lambda: f64,
    t: f64,
    ratio: f64,
}

#[derive(Serialize)]
struct LowerBound {
    lambda: f64,
    psd_gap: f64,
    matrix: jensen_order::hermitian::MatrixFile,
}

#[derive(Serialize)]
struct Remark36Report {
    ratios: Vec<RatioRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lower_bounds: Option<Vec<LowerBound>>,
}

fn cmd_remark36(args: &Remark36Args) -> Result<u8, Failure> {
    let ratios = args
        .lambdas
        .iter()
        .map(|&lambda| {
            remark36_ratio(args.t, lambda)
                .map(|ratio| RatioRow {
                    lambda,
                    t: args.t,
                    ratio,
                })
                .map_err(|e| e.to_string())
        })
        .collect::<Result<Vec<_>, _>>()?;
    let lower_bounds = match &args.x {
        Some(path) => {
            let x = load(path)?;
            Some(
                args.lambdas
                    .iter()
                    .map(|&lambda| {
                        remark36_lower_bound(&x, lambda)
                            .map(|(m, psd_gap)| LowerBound {
                                lambda,
                                psd_gap,
                                matrix: m.to_file(),
                            })
                            .map_err(|e| e.to_string())
                    })
                    .collect::<Result<Vec<_>, _>>()?,
            )
        }
        None => None,
    };
    let text = match args.output.format.unwrap_or(Format::Csv) {
        Format::Csv | Format::Pretty => {
            let mut s = String::from("lambda,t,ratio\n");
            for r in &ratios {
                let _ = writeln!(s, "{},{},{}", sig(r.lambda), sig(r.t), sig(r.ratio));
            }
            if let Some(lb) = &lower_bounds {
                s.push_str("\nlambda,psd_gap\n");
                for r in lb {
                    let _ = writeln!(s, "{},{}", sig(r.lambda), sig(r.psd_gap));
                }
            }
            s
        }
        Format::Json => envelope(
            "remark36",
            0,
            Remark36Report {
                ratios,
                lower_bounds,
            },
        ),
    };
    emit(&args.output, &text)?;
    Ok(EXIT_OK)
}

fn fuzz_csv(report: &FuzzReport) -> String {
    let mut s = String::from("suite,index,dim,function,outcome,margin_or_violation\n");
    for o in &report.agreement {
        let _ = writeln!(
            s,
            "agreement,{},{},{},{},{}",
            o.index,
            o.dim,
            o.function.name(),
            if o.agree() { "agree" } else { "disagree" },
            sig(o.tangent_margin)
        );
    }
    for o in &report.contrapositive {
        let _ = writeln!(
            s,
            "contrapositive,{},{},{},{},{}",
            o.index,
            o.dim,
            o.function.name(),
            if o.verified { "witness" } else { "none" },
            o.violation.map(sig).unwrap_or_default()
        );
    }
    s
}

fn cmd_fuzz(args: &FuzzArgs) -> Result<u8, Failure> {
    let cfg = FuzzConfig {
        count: args.count,
        dims: args.dims,
        seed: args.seed,
        spectrum: args.spectrum,
        restarts: args.restarts,
    };
    let report = run_fuzz(&cfg).map_err(|e| e.to_string())?;
    for d in &report.discrepancies {
        let paths = write_case_files(&args.cases_dir, d).map_err(|e| e.to_string())?;
        eprintln!("discrepancy: {} -> {}", d.reason, paths[0].display());
    }
    let text = match args.output.format.unwrap_or(Format::Json) {
        Format::Json => report.to_json(),
        Format::Csv => fuzz_csv(&report),
        Format::Pretty => {
            let agree = report.agreement.iter().filter(|o| o.agree()).count();
            let found = report.contrapositive.iter().filter(|o| o.verified).count();
            format!(
                "seed {}\nmethod agreement: {agree}/{}\ncontrapositive witnesses: {found}/{}\ndiscrepancies: {}\n",
                report.seed,
                report.agreement.len(),
                report.contrapositive.len(),
                report.discrepancies.len()
            )
        }
    };
    emit(&args.output, &text)?;
    Ok(if report.passed() {
        EXIT_OK
    } else {
        EXIT_VIOLATED
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Check(a) => cmd_check(a),
        Command::DecideEqual(a) => cmd_decide_equal(a),
        Command::Sandwich(a) => cmd_sandwich(a),
        Command::Discretize(a) => cmd_discretize(a),
        Command::Remark36(a) => cmd_remark36(a),
        Command::Fuzz(a) => cmd_fuzz(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
