use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_jensen-order"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin()
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Writes a real matrix file and returns its path.
fn matrix(dir: &Path, name: &str, dim: usize, entries: &[f64]) -> PathBuf {
    let pairs: Vec<String> = entries.iter().map(|x| format!("[{x}, 0.0]")).collect();
    let path = dir.join(name);
    fs::write(
        &path,
        format!("{{\"dim\": {dim}, \"entries\": [{}]}}", pairs.join(", ")),
    )
    .unwrap();
    path
}

fn diag(dir: &Path, name: &str, d: &[f64]) -> PathBuf {
    let n = d.len();
    let mut e = vec![0.0; n * n];
    for (k, &x) in d.iter().enumerate() {
        e[k * n + k] = x;
    }
    matrix(dir, name, n, &e)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn check_equal_pair_holds() {
    let t = TempDir::new().unwrap();
    let x = matrix(t.path(), "x.json", 2, &[3.0, 1.0, 1.0, 2.0]);
    let o = run(
        t.path(),
        &["check", "--f", "sqrt", "--dir", "concave-le", s(&x), s(&x)],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("\"version\"") && out.contains("\"seed\""));
    assert!(out.contains("\"holds\": true"));
}

#[test]
fn check_scalar_violation_prints_witness() {
    let t = TempDir::new().unwrap();
    let x = diag(t.path(), "x4.json", &[4.0]);
    let y = diag(t.path(), "y1.json", &[1.0]);
    let o = run(
        t.path(),
        &["check", "--f", "sqrt", "--dir", "concave-le", s(&x), s(&y)],
    );
    assert_eq!(code(&o), 2);
    assert!(stdout(&o).contains("\"witness\""));
    let o = run(
        t.path(),
        &["check", "--f", "sqrt", "--format", "pretty", s(&x), s(&y)],
    );
    assert_eq!(code(&o), 2);
    assert!(stdout(&o).contains("witness ξ"));
}

#[test]
fn check_one_sided_ignores_reverse_ordering() {
    let t = TempDir::new().unwrap();
    let x = diag(t.path(), "x.json", &[1.0, 2.0]);
    let y = diag(t.path(), "y.json", &[1.0, 3.0]);
    assert_eq!(
        code(&run(
            t.path(),
            &["check", "--f", "sqrt", "--one-sided", s(&x), s(&y)]
        )),
        0
    );
    assert_eq!(
        code(&run(t.path(), &["check", "--f", "sqrt", s(&x), s(&y)])),
        2
    );
    assert_eq!(
        code(&run(
            t.path(),
            &["check", "--f", "sqrt", "--method", "sphere", s(&x), s(&y)]
        )),
        2
    );
}

#[test]
fn check_rejects_bad_inputs_with_distinct_messages() {
    let t = TempDir::new().unwrap();
    let x = diag(t.path(), "x.json", &[1.0, 2.0]);
    let o = run(t.path(), &["check", "--f", "pow:1", s(&x), s(&x)]);
    assert_eq!(code(&o), 1);
    let pow_msg = stderr(&o);

    let bad = t.path().join("bad.json");
    fs::write(&bad, "{\"dim\": 2, \"entries\": [").unwrap();
    let o = run(t.path(), &["check", "--f", "sqrt", s(&bad), s(&x)]);
    assert_eq!(code(&o), 1);
    let json_msg = stderr(&o);

    let nh = matrix(t.path(), "nh.json", 2, &[1.0, 2.0, 3.0, 1.0]);
    let o = run(t.path(), &["check", "--f", "sqrt", s(&nh), s(&x)]);
    assert_eq!(code(&o), 1);
    let herm_msg = stderr(&o);

    let neg = diag(t.path(), "neg.json", &[-1.0, 2.0]);
    let o = run(t.path(), &["check", "--f", "sqrt", s(&neg), s(&x)]);
    assert_eq!(code(&o), 1);
    let domain_msg = stderr(&o);

    let msgs = [&pow_msg, &json_msg, &herm_msg, &domain_msg];
    for (i, a) in msgs.iter().enumerate() {
        assert!(a.starts_with("error:"), "{a}");
        for b in &msgs[i + 1..] {
            assert_ne!(a, b);
        }
    }
    assert!(herm_msg.to_lowercase().contains("hermitian"), "{herm_msg}");
}

#[test]
fn usage_errors_exit_one() {
    let t = TempDir::new().unwrap();
    assert_eq!(code(&run(t.path(), &["check"])), 1);
    assert_eq!(code(&run(t.path(), &["no-such-command"])), 1);
    assert_eq!(code(&run(t.path(), &["--help"])), 0);
}

#[test]
fn decide_equal_exit_codes() {
    let t = TempDir::new().unwrap();
    let x = matrix(t.path(), "x.json", 2, &[3.0, 1.0, 1.0, 2.0]);
    let o = run(
        t.path(),
        &[
            "decide-equal",
            "--f",
            "square",
            "--dir",
            "convex-ge",
            s(&x),
            s(&x),
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("\"kind\": \"EQUAL\""));

    let a = diag(t.path(), "a.json", &[1.0, 2.0, 3.0]);
    let b = diag(t.path(), "b.json", &[1.0, 2.0, 3.01]);
    let o = run(
        t.path(),
        &[
            "decide-equal",
            "--f",
            "square",
            "--dir",
            "convex-ge",
            s(&a),
            s(&b),
        ],
    );
    assert_eq!(code(&o), 2);
    assert!(stdout(&o).contains("PREMISE_VIOLATED") && stdout(&o).contains("\"witness\""));

    let o = run(
        t.path(),
        &[
            "decide-equal",
            "--f",
            "square",
            "--dir",
            "convex-ge",
            s(&x),
            s(&a),
        ],
    );
    assert_eq!(code(&o), 1);
}

#[test]
fn decide_equal_pretty_has_table_and_json() {
    let t = TempDir::new().unwrap();
    let x = diag(t.path(), "x.json", &[1.0, 2.0, 3.0]);
    let o = run(
        t.path(),
        &[
            "decide-equal",
            "--f",
            "sqrt",
            "--format",
            "pretty",
            s(&x),
            s(&x),
        ],
    );
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert!(out.contains("conclusion: EQUAL"));
    assert!(out.contains("\"steps\""));
}

#[test]
fn sandwich_equal_pair() {
    let t = TempDir::new().unwrap();
    let x = matrix(t.path(), "x.json", 2, &[3.0, 1.0, 1.0, 2.0]);
    let o = run(
        t.path(),
        &["sandwich", "--f", "sqrt", "--g", "sqrt", s(&x), s(&x)],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("\"kernel_match\": true"));

    let k = diag(t.path(), "k.json", &[0.0, 1.0]);
    let k2 = diag(t.path(), "k2.json", &[0.01, 1.0]);
    let o = run(
        t.path(),
        &["sandwich", "--f", "sqrt", "--g", "sqrt", s(&k), s(&k2)],
    );
    assert_eq!(code(&o), 2);
    assert!(stdout(&o).contains("\"kernel_match\": false"));
}

#[test]
fn discretize_csv_rows() {
    let t = TempDir::new().unwrap();
    let x = diag(t.path(), "x.json", &[1.0, 2.0, 4.0, 9.0]);
    let o = run(
        t.path(),
        &[
            "discretize",
            "--f",
            "sqrt",
            "--g",
            "sqrt",
            "--a",
            "0.5",
            "--b",
            "10",
            "--n-list",
            "2,4,8",
            s(&x),
            s(&x),
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(
        lines[0],
        "n,rho_lower,rho_upper,b3_lhs,b3_rhs,b4_lhs,b4_rhs,final_lhs,final_rhs,pass"
    );
    assert_eq!(lines.len(), 4);
    for (row, n) in lines[1..].iter().zip(["2", "4", "8"]) {
        assert!(row.starts_with(&format!("{n},")));
        assert!(row.ends_with(",true"));
    }
}

#[test]
fn discretize_rejects_zero_endpoint_and_large_norm() {
    let t = TempDir::new().unwrap();
    let x = diag(t.path(), "x.json", &[1.0, 2.0]);
    let o = run(
        t.path(),
        &[
            "discretize",
            "--a",
            "0",
            "--b",
            "10",
            "--n-list",
            "2",
            s(&x),
            s(&x),
        ],
    );
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("must be positive"));

    let o = run(
        t.path(),
        &[
            "discretize",
            "--a",
            "0.5",
            "--b",
            "2",
            "--n-list",
            "2",
            s(&x),
            s(&x),
        ],
    );
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("‖X‖ < b"), "{}", stderr(&o));
}

#[test]
fn discretize_json_has_version_and_seed() {
    let t = TempDir::new().unwrap();
    let x = diag(t.path(), "x.json", &[1.0, 2.0]);
    let out = t.path().join("r.json");
    let o = run(
        t.path(),
        &[
            "discretize",
            "--a",
            "0.5",
            "--b",
            "3",
            "--n-list",
            "1,2",
            "--format",
            "json",
            "--out",
            s(&out),
            s(&x),
            s(&x),
        ],
    );
    assert_eq!(code(&o), 0);
    let text = fs::read_to_string(out).unwrap();
    assert!(text.contains("\"version\"") && text.contains("\"seed\": 0"));
    assert!(text.contains("\"premise_residuals\""));
}

#[test]
fn remark36_table() {
    let t = TempDir::new().unwrap();
    let o = run(t.path(), &["remark36"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    let ratios: Vec<f64> = out
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(ratios.len(), 4);
    assert!(ratios.windows(2).all(|w| w[1] > w[0]));
    assert_eq!(
        code(&run(t.path(), &["remark36", "--t", "1", "--lambdas", "1"])),
        1
    );
}

#[test]
fn fuzz_scalar_cases() {
    let t = TempDir::new().unwrap();
    let o = run(t.path(), &["fuzz", "--count", "1", "--dims", "1..1"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("\"seed\": 0"));
    assert!(!t.path().join("fuzz-cases").exists());
}

#[test]
fn fuzz_is_byte_identical() {
    let t = TempDir::new().unwrap();
    let args = ["fuzz", "--count", "12", "--dims", "2..4", "--seed", "7"];
    let a = run(t.path(), &args);
    let b = run(t.path(), &args);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let c = run(
        t.path(),
        &[
            "fuzz", "--count", "12", "--dims", "2..4", "--seed", "7", "--format", "csv",
        ],
    );
    let d = run(
        t.path(),
        &[
            "fuzz", "--count", "12", "--dims", "2..4", "--seed", "7", "--format", "csv",
        ],
    );
    assert_eq!(c.stdout, d.stdout);
}
