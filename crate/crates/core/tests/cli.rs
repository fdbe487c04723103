use std::path::Path;
use std::process::{Command, Output};

use semigroup_calculus::{Complex64, Operator};

fn sgcalc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sgcalc"))
        .args(args)
        .output()
        .expect("sgcalc runs")
}

fn result_operator(path: &Path) -> (Operator, f64, serde_json::Value) {
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    let op: Operator = serde_json::from_value(v["result"].clone()).unwrap();
    (op, v["budget"].as_f64().unwrap(), v["meta"].clone())
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[test]
fn funcalc_reproduces_the_semigroup() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.json");
    let o = sgcalc(&[
        "funcalc",
        "--backend",
        "diag:-1,-2",
        "--expr",
        "exp(-0.5*z)",
        "--alpha",
        "-0.4",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (x, budget, meta) = result_operator(&out);
    let exact = Operator::from_diagonal(&[c((-0.5f64).exp(), 0.0), c((-1f64).exp(), 0.0)]);
    let err = (&x - &exact).norm();
    assert!(err <= budget && budget < 1e-6, "{err} vs {budget}");
    assert_eq!(meta["path"], "quotient");
}

#[test]
fn lattice_resolvent_left_of_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let o = sgcalc(&[
        "resolvent",
        "--backend",
        "nilshift:8:0.125",
        "--lambda",
        "-5+0i",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let (r, _, meta) = result_operator(&out);
    assert!(r.is_finite());
    assert_eq!(meta["growth_bound"], "-inf");
    // (λI − A)R = I for the quantized generator, checked through the
    // closed form R = c S (I − qS)⁻¹, i.e. (I − qS) R = c S
    let q = (5.0f64 * 0.125).exp();
    let cell = (1.0 - q) / -5.0;
    let s = semigroup_calculus::SemigroupBackend::shift_matrix(8);
    let lhs = &(&Operator::identity(8) - &s.scale_real(q)) * &r;
    assert!((&lhs - &s.scale_real(cell)).norm() < 1e-9);
}

#[test]
fn matrix_file_backend_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let mat = dir.path().join("a.json");
    std::fs::write(
        &mat,
        r#"{"dim": 2, "entries": [[-1, 0], [1, 0], [0, 0], [-2, 0]]}"#,
    )
    .unwrap();
    let spec = format!("mat:{}", mat.display());
    let o = sgcalc(&["spectrum", "--backend", &spec]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let mut re: Vec<f64> = v["result"]["points"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p[0].as_f64().unwrap())
        .collect();
    re.sort_by(f64::total_cmp);
    assert!((re[0] + 2.0).abs() < 1e-12 && (re[1] + 1.0).abs() < 1e-12);

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"dim": 2, "entries": [[1, 0]]}"#).unwrap();
    let o = sgcalc(&["spectrum", "--backend", &format!("mat:{}", bad.display())]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("expected 4 entries"));

    // abscissa violation names the precondition
    let o = sgcalc(&["resolvent", "--backend", &spec, "--lambda", "-3+0i"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("abscissa"));
    // the real segment from the seed crosses both eigenvalues
    let o = sgcalc(&[
        "resolvent",
        "--backend",
        &spec,
        "--lambda",
        "-3+0i",
        "--continue",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let o = sgcalc(&[
        "resolvent",
        "--backend",
        &spec,
        "--lambda",
        "-3+1i",
        "--continue",
    ]);
    assert!(o.status.success());

    assert_eq!(
        sgcalc(&["resolvent", "--backend", "diag:-1"]).status.code(),
        Some(2)
    );
    assert_eq!(sgcalc(&["invert"]).status.code(), Some(2));
}

#[test]
fn reruns_are_byte_identical() {
    let args = [
        "invlaplace",
        "--expr",
        "1/((z+2)^2)",
        "--alpha",
        "-1",
        "--horizon",
        "10",
    ];
    let (a, b) = (sgcalc(&args), sgcalc(&args));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    // 17 significant digits throughout
    assert!(String::from_utf8_lossy(&a.stdout).contains("e-"));
    assert!(v["budget"].as_f64().unwrap() < 1e-4);
}

#[test]
fn verify_subset_of_backends() {
    let o = sgcalc(&["verify", "--seed", "7", "--backends", "nilpotent_shift"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0]["id"], 4);
    assert_eq!(rows[0]["pass"], true);
}
