use anisoheat::error::Error;
use anisoheat::lattice::builtin_case;
use anisoheat::shell::*;
use proptest::prelude::*;
use std::path::{Path, PathBuf};
use std::process::Command;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn read(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap()
}

fn config(json: serde_json::Value) -> ExperimentConfig {
    serde_json::from_value(json).unwrap()
}

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_anisoheat"))
}

fn files_in(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> =
        std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect();
    v.sort();
    v
}

#[test]
fn example1_fixture_is_the_builtin_attractor() {
    let p = parse_symbol(&read("example1.json")).unwrap();
    let q = builtin_case(1).unwrap().symbol;
    assert_eq!(p.terms(), q.terms());
    assert_eq!(p.weight(), q.weight());
    assert_eq!(p.label(), q.label());
    let back = parse_symbol(&serialize_symbol(&p)).unwrap();
    assert_eq!(back.terms(), p.terms());
}

#[test]
fn degree_violation_names_beta() {
    let err = parse_symbol(&read("degree_too_high.json")).unwrap_err();
    let j = error_json(&err);
    assert_eq!(exit_code(&err), 2);
    assert!(err.to_string().contains('5') || j["beta"] == serde_json::json!([5, 0]), "{err}");
}

#[test]
fn schema_errors_carry_paths() {
    let err = parse_symbol(r#"{"dim": 1, "weight": [1], "terms": [{"beta": [2], "re": 1, "colour": 3}]}"#).unwrap_err();
    match &err {
        Error::Schema { path, .. } => assert!(path.contains("terms[0]"), "{path}"),
        other => panic!("{other:?}"),
    }
    assert!(matches!(parse_symbol("{\"dim\": 1,"), Err(Error::Json(_))));
}

#[test]
fn expressions() {
    let e = parse_expr("1+0.5*sin(x_1)", 1).unwrap();
    assert!((e.eval(&[std::f64::consts::FRAC_PI_2]) - 1.5).abs() < 1e-15);
    let err = parse_expr("x_3", 2).unwrap_err();
    assert_eq!(exit_code(&err), 2);
    assert!(parse_expr("2 * (x_1", 1).is_err());
    assert_eq!(parse_expr("2^3 - 1", 1).unwrap().as_constant(), Some(7.0));
}

#[test]
fn operator_fixture() {
    let h = parse_operator(&read("sine_operator.json")).unwrap();
    assert_eq!(h.dim(), 1);
    assert_eq!(h.delta(), 0.5);
    assert_eq!(h.rho(), 0.5);
    let a = &h.coeffs()[0].1;
    assert!((a.eval(&[std::f64::consts::FRAC_PI_2]).re - 1.5).abs() < 1e-15);
}

#[test]
fn phi_fixture_and_convpow() {
    let phi = parse_phi(&read("bernoulli.json")).unwrap();
    assert_eq!(phi.mass().re, 1.0);
    let dir = tempfile::tempdir().unwrap();
    for method in ["fft", "direct"] {
        let out = dir.path().join(format!("{method}.csv"));
        let cfg = config(serde_json::json!({
            "command": "convpow", "phi": fixture("bernoulli.json"), "n": [10], "method": method, "out": out
        }));
        let o = run(&cfg, None).unwrap();
        assert!(o.pass());
        let text = std::fs::read_to_string(&out).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("x_1,re,im"));
        let row5: Vec<f64> = lines.nth(5).unwrap().split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!(row5[0], 5.0);
        assert!((row5[1] - 252.0 / 1024.0).abs() < 1e-15);
    }
}

#[test]
fn llt_writes_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("llt1.csv");
    let cfg = config(serde_json::json!({"command": "llt", "case": 1, "n": [25, 50], "out": out}));
    let o = run(&cfg, None).unwrap();
    assert!(o.pass());
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,sup_error,normalized_error");
    assert_eq!(lines.len(), 3);
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("llt1.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "llt");
    assert_eq!(manifest["pass"], true);
    assert_eq!(manifest["outputs"][0]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn heatkernel_origin_value() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("k.csv");
    let cfg = config(serde_json::json!({
        "command": "heatkernel", "symbol": "laplacian.json", "t": 1.0, "box": "-8:8", "n": [512], "out": out
    }));
    let o = run(&cfg, Some(&fixture(""))).unwrap();
    assert!(o.pass());
    let mut rdr = csv::Reader::from_path(&out).unwrap();
    let headers = rdr.headers().unwrap().clone();
    assert_eq!(headers.iter().collect::<Vec<_>>(), vec!["x_1", "re", "im"]);
    let origin = rdr
        .records()
        .map(|r| r.unwrap())
        .find(|r| r[0].parse::<f64>().unwrap() == 0.0)
        .unwrap();
    let v: f64 = origin[1].parse().unwrap();
    assert!((v - (4.0 * std::f64::consts::PI).powf(-0.5)).abs() < 1e-6);
}

#[test]
fn lf_transform_of_points() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.csv");
    let cfg = config(serde_json::json!({
        "command": "lf-transform", "symbol": "laplacian.json", "points": "points.csv", "out": out
    }));
    assert!(run(&cfg, Some(&fixture(""))).unwrap().pass());
    let text = std::fs::read_to_string(&out).unwrap();
    let vals: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    for (v, x) in vals.iter().zip([0.0f64, 1.5, -2.0]) {
        assert!((v - x * x / 4.0).abs() < 1e-12);
    }
}

#[test]
fn symbol_check_report() {
    let cfg = config(serde_json::json!({"command": "symbol-check", "symbol": fixture("example1.json")}));
    let o = execute(&cfg, None).unwrap();
    assert!(o.pass());
    assert_eq!(o.artifacts.paths().count(), 0);
}

#[test]
fn malformed_input_exits_2_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"dim\": 1, \"weight\": [1], \"terms\": [").unwrap();
    let out = dir.path().join("k.csv");
    let res = cli()
        .args(["heatkernel", "--symbol"])
        .arg(&bad)
        .args(["--t", "1", "--n", "64", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(res.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&res.stderr).unwrap();
    assert_eq!(err["error"], "json");
    assert_eq!(err["exit_code"], 2);
    assert_eq!(files_in(dir.path()), vec!["bad.json".to_string()]);
}

#[test]
fn cli_subcommand_and_config_agree() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let res = cli().args(["llt", "--case", "3", "--n", "25", "--out"]).arg(&a).output().unwrap();
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&res.stdout).unwrap();
    assert_eq!(summary["pass"], true);
    let conf = dir.path().join("run.json");
    std::fs::write(&conf, r#"{"command": "llt", "case": 3, "n": [25], "out": "b.csv"}"#).unwrap();
    let res = cli().arg("run").arg("--config").arg(&conf).output().unwrap();
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(dir.path().join("b.csv")).unwrap());
}

#[test]
fn outputs_are_deterministic() {
    let cfg = config(serde_json::json!({
        "command": "heatkernel", "symbol": fixture("example1.json"), "t": 0.5, "box": "-6:6", "n": [128],
        "out": "k.csv"
    }));
    let a = execute(&cfg, None).unwrap();
    let b = execute(&cfg, None).unwrap();
    let pa: Vec<PathBuf> = a.artifacts.paths().map(Path::to_path_buf).collect();
    assert_eq!(pa.len(), 2);
    for p in &pa {
        assert_eq!(a.artifacts.get(p), b.artifacts.get(p));
    }
}

#[test]
fn numerical_failures_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let neg = dir.path().join("neg.json");
    std::fs::write(&neg, r#"{"dim": 1, "weight": [1], "terms": [{"beta": [2], "re": -1}]}"#).unwrap();
    let res = cli().args(["heatkernel", "--symbol"]).arg(&neg).args(["--out"]).arg(dir.path().join("k.csv")).output().unwrap();
    assert_eq!(res.status.code(), Some(1));
    let err: serde_json::Value = serde_json::from_slice(&res.stderr).unwrap();
    assert_eq!(err["error"], "not_positive_definite");
}

#[test]
fn grid_specs() {
    let g = GridSpec::parse("-1:1:5").unwrap();
    assert_eq!(g.nodes(), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
    assert!(GridSpec::parse("1:-1").is_err());
    assert!(GridSpec::parse("a:b").is_err());
}

fn term_strategy() -> impl Strategy<Value = (u32, u32, f64, f64)> {
    (0u32..=4, -3.0f64..3.0, -3.0f64..3.0).prop_map(|(k, re, im)| (k, 2 * (4 - k), re, im))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn symbol_json_round_trip(terms in prop::collection::btree_map(0u32..=4, term_strategy(), 1..5)) {
        // weight (2, 4): beta = (k, 2 (4 - k)) has |beta:m| = k / 2 + (4 - k) / 2 = 2
        let json = serde_json::json!({
            "dim": 2,
            "weight": [2, 4],
            "terms": terms.values().map(|(a, b, re, im)| serde_json::json!({"beta": [a, b], "re": re, "im": im})).collect::<Vec<_>>(),
        });
        let p = parse_symbol(&json.to_string()).unwrap();
        let q = parse_symbol(&serialize_symbol(&p)).unwrap();
        prop_assert_eq!(p.terms(), q.terms());
        prop_assert_eq!(p.weight(), q.weight());
    }
}
