use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn warpco(dir: &Path, args: &[&str], config: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_warpco"));
    cmd.args(args);
    if let Some(c) = config {
        let path = dir.join("config.json");
        fs::write(&path, c).unwrap();
        cmd.arg("--config").arg(path);
    }
    cmd.output().expect("binary runs")
}

fn run_report(args: &[&str], config: Option<&str>) -> (i32, Value) {
    let dir = TempDir::new().unwrap();
    let out = warpco(dir.path(), args, config);
    let code = out.status.code().unwrap();
    let report = if code == 0 || code == 3 {
        serde_json::from_slice(&out.stdout).expect("report on stdout")
    } else {
        Value::Null
    };
    (code, report)
}

fn exit_code(args: &[&str], config: Option<&str>) -> i32 {
    let dir = TempDir::new().unwrap();
    warpco(dir.path(), args, config).status.code().unwrap()
}

#[test]
fn covering_report_ln_has_bounded_besov_counts() {
    let (code, r) = run_report(&["covering-report"], Some(r#"{"map": "ln", "d": 1, "delta": 1, "r": 0.6, "besov_jmax": 20}"#));
    assert_eq!(code, 0);
    assert_eq!(r["command"], "covering-report");
    assert_eq!(r["config"]["r"], 0.6);
    assert_eq!(r["config"]["window"], 5.0);
    let counts: Vec<u64> = r["result"]["besov_cross"]["counts_for_b"]
        .as_array()
        .unwrap()
        .iter()
        .map(|row| row[1].as_u64().unwrap())
        .collect();
    assert_eq!(counts.len(), 21);
    assert!(counts.iter().all(|&c| (1..=8).contains(&c)), "{counts:?}");
}

#[test]
fn uncovering_radius_is_a_config_error() {
    assert_eq!(exit_code(&["covering-report"], Some(r#"{"map": "identity", "d": 2, "r": 0.5}"#)), 2);
}

#[test]
fn malformed_configs_are_config_errors() {
    assert_eq!(exit_code(&["covering-report"], Some(r#"{"map": "ln", "r": 0.6, "bogus": 1}"#)), 2);
    assert_eq!(exit_code(&["covering-report"], Some(r#"{"map": "nope", "r": 0.6}"#)), 2);
    assert_eq!(exit_code(&["covering-report"], Some("not json")), 2);
    assert_eq!(exit_code(&["transform"], None), 2);
}

#[test]
fn alpha_verify_passes_and_rejects_alpha_above_one() {
    let (code, r) = run_report(&["alpha-verify"], Some(r#"{"alpha": 0.5}"#));
    assert_eq!(code, 0);
    assert_eq!(r["pass"], true);
    assert_eq!(exit_code(&["alpha-verify"], Some(r#"{"alpha": 2}"#)), 2);
}

#[test]
fn alpha_mismatch_is_a_verification_failure() {
    let (code, r) = run_report(&["covering-report"], Some(r#"{"map": "alpha:0.5", "r": 0.6, "alpha_verify": 0.0}"#));
    assert_eq!(code, 3);
    assert_eq!(r["pass"], false);
}

#[test]
fn embed_check_besov_identifications() {
    let cfg = |q: u32, d: u32| {
        format!(
            r#"{{"space_a": {{"kind": "besov", "s": 1, "p": 2, "q": {q}, "dim": {d}}},
                "space_b": {{"kind": "warped", "map": "ln", "dim": {d}, "kappa": {{"kind": "besov_id", "s": 1}}, "p": 2, "q": {q}}}}}"#
        )
    };
    let (code, r) = run_report(&["embed-check"], Some(&cfg(2, 1)));
    assert_eq!(code, 0);
    assert_eq!(r["result"]["relation"], "equal");
    let (code, r) = run_report(&["embed-check"], Some(&cfg(1, 2)));
    assert_eq!(code, 0);
    assert_eq!(r["result"]["relation"], "embeds");
    assert_eq!(r["result"]["direction"], "a into b");
}

#[test]
fn embed_check_expectation_mismatch_exits_three() {
    let cfg = r#"{"space_a": {"kind": "besov", "s": 1, "p": 2, "q": 1, "dim": 2},
                  "space_b": {"kind": "warped", "map": "ln", "dim": 2, "kappa": {"kind": "besov_id", "s": 1}, "p": 2, "q": 1},
                  "expect": "equal"}"#;
    assert_eq!(exit_code(&["embed-check"], Some(cfg)), 3);
}

#[test]
fn transform_bundled_signal_identity_map() {
    let (code, r) = run_report(&["transform"], Some(r#"{"map": "identity", "synthesize": true, "tol": 1e-3}"#));
    assert_eq!(code, 0);
    let defect = r["result"]["parseval"]["defect"].as_f64().unwrap();
    assert!(defect <= 1e-3, "{defect}");
    assert!(r["result"]["round_trip_error"].as_f64().is_some());
}

#[test]
fn transform_zero_signal_gives_zero_outputs() {
    let (code, r) = run_report(&["transform"], Some(r#"{"map": "identity", "synthesize": true, "signal": {"kind": "zero"}}"#));
    assert_eq!(code, 0);
    assert_eq!(r["result"]["coefficient_energy"], 0.0);
    assert_eq!(r["result"]["round_trip_error"], 0.0);
}

#[test]
fn binary_signal_round_trip_through_transform() {
    let dir = TempDir::new().unwrap();
    let n = 1024usize;
    let extent = 32.0f64;
    let mut bytes = format!(r#"{{"d":1,"N":{n},"L":{extent}}}"#).into_bytes();
    bytes.push(b'\n');
    for i in 0..n {
        let xi = -extent / 2.0 + extent * i as f64 / n as f64;
        let re = (-((xi - 0.3) / 0.1).powi(2) / 2.0).exp();
        bytes.extend_from_slice(&re.to_le_bytes());
        bytes.extend_from_slice(&0f64.to_le_bytes());
    }
    fs::write(dir.path().join("in.bin"), &bytes).unwrap();
    let out_dir = dir.path().join("out");
    let cfg = format!(r#"{{"map": "identity", "grid": {{"n": {n}, "extent": {extent}}}, "synthesize": true, "signal": {{"kind": "file", "path": "in.bin"}}}}"#);
    let out = warpco(dir.path(), &["transform", "--out", out_dir.to_str().unwrap()], Some(&cfg));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let report: Value = serde_json::from_str(&fs::read_to_string(out_dir.join("transform.json")).unwrap()).unwrap();
    assert!(report["result"]["round_trip_error"].as_f64().unwrap() < 1e-3);
    let csv = fs::read_to_string(out_dir.join("coefficients.csv")).unwrap();
    assert!(csv.starts_with("index,omega,weight"));
    assert_eq!(csv.lines().count() as u64, 1 + report["result"]["channels"].as_u64().unwrap());

    let back = fs::read(out_dir.join("reconstruction.bin")).unwrap();
    let split = back.iter().position(|&b| b == b'\n').unwrap();
    let header: Value = serde_json::from_slice(&back[..split]).unwrap();
    assert_eq!(header["d"], 1);
    assert_eq!(header["N"], n);
    assert_eq!(header["L"], extent);
    assert_eq!(back.len() - split - 1, 16 * n);
}

#[test]
fn signal_file_with_wrong_grid_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let mut bytes = br#"{"d":1,"N":4,"L":8.0}"#.to_vec();
    bytes.push(b'\n');
    bytes.extend_from_slice(&[0u8; 64]);
    fs::write(dir.path().join("in.bin"), &bytes).unwrap();
    let out = warpco(dir.path(), &["transform"], Some(r#"{"map": "identity", "signal": {"kind": "file", "path": "in.bin"}}"#));
    assert_eq!(out.status.code(), Some(2));
    bytes.truncate(bytes.len() - 8);
    fs::write(dir.path().join("in.bin"), &bytes).unwrap();
    let out = warpco(
        dir.path(),
        &["transform"],
        Some(r#"{"map": "identity", "grid": {"n": 4, "extent": 8}, "signal": {"kind": "file", "path": "in.bin"}}"#),
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn parseval_defects_decrease() {
    let (code, r) = run_report(&["parseval"], Some(r#"{"map": "identity", "require_monotone": true, "tol": 1e-6}"#));
    assert_eq!(code, 0);
    assert_eq!(r["result"]["monotone"], true);
    assert_eq!(r["result"]["rows"].as_array().unwrap().len(), 3);
}

#[test]
fn besov_compare_table_writes_csv() {
    let dir = TempDir::new().unwrap();
    let out_dir = dir.path().join("out");
    let out = warpco(dir.path(), &["besov-compare", "--out", out_dir.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(out_dir.join("truth_table.csv")).unwrap();
    assert_eq!(csv.lines().count(), 19);
    let report: Value = serde_json::from_str(&fs::read_to_string(out_dir.join("besov-compare.json")).unwrap()).unwrap();
    assert_eq!(report["config"]["table"], true);
}

#[test]
fn norm_probe_is_seed_reproducible() {
    let cfg = r#"{"maps": ["identity"], "signals": 2, "grid": {"n": 1024, "extent": 16}, "exponents": [[2, 2], ["inf", 1]]}"#;
    let (code, a) = run_report(&["norm-probe", "--seed", "7", "--threads", "2"], Some(cfg));
    assert_eq!(code, 0);
    let (_, b) = run_report(&["norm-probe", "--seed", "7"], Some(cfg));
    assert_eq!(a["result"], b["result"]);
    assert_eq!(a["seed"], 7);
    assert_eq!(a["result"]["bands"][1]["p"], "inf");
}
