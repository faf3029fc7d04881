use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cohdist::coherence::{check_diio, KrausChannel};
use serde_json::Value;

const H: f64 = std::f64::consts::FRAC_1_SQRT_2;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cohdist"))
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn run_json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn plus_protocol(dir: &Path) -> PathBuf {
    write(dir, "plus.json", &format!(r#"{{"state": {{"vector": [[{H},0],[{H},0]]}}}}"#))
}

fn bell_protocol(dir: &Path) -> PathBuf {
    write(
        dir,
        "bell.json",
        &format!(r#"{{"state": {{"vector": [[{H},0],[0,0],[0,0],[{H},0]], "layout": {{"factors": [["A",2],["B",2]]}}}}}}"#),
    )
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn entropy_of_plus_against_its_dephasing() {
    let dir = tempfile::tempdir().unwrap();
    let pair = write(
        dir.path(),
        "pair.json",
        r#"{"rho": {"rows":2,"cols":2,"data":[[0.5,0],[0.5,0],[0.5,0],[0.5,0]]},
            "sigma": {"rows":2,"cols":2,"data":[[0.5,0],[0,0],[0,0],[0.5,0]]}}"#,
    );
    let v = run_json(&["entropy", s(&pair), "--eps", "0.3"]);
    assert!((v["D_bits"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!(v["V_bits2"].as_f64().unwrap().abs() < 1e-12);
}

#[test]
fn identical_pair_dh() {
    let dir = tempfile::tempdir().unwrap();
    let m = r#"{"rows":2,"cols":2,"data":[[0.6,0],[0.1,0.2],[0.1,-0.2],[0.4,0]]}"#;
    let pair = write(dir.path(), "pair.json", &format!(r#"{{"rho": {m}, "sigma": {m}}}"#));
    let v = run_json(&["dh", s(&pair), "--eps", "0.25"]);
    assert!((v["value_bits"].as_f64().unwrap() + 0.75f64.log2()).abs() < 1e-9);
}

#[test]
fn malformed_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", "{\"rho\": ");
    assert_eq!(run(&["dh", s(&bad), "--eps", "0.1"]).status.code(), Some(2));
    assert_eq!(run(&["dh", "/nonexistent/file.json", "--eps", "0.1"]).status.code(), Some(2));
    let plus = plus_protocol(dir.path());
    assert_eq!(run(&["protocol", s(&plus), "--eps", "1.5"]).status.code(), Some(2));
}

#[test]
fn non_trace_preserving_channel_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(
        dir.path(),
        "p.json",
        &format!(
            r#"{{"state": {{"vector": [[{H},0],[{H},0]]}},
                "channel": {{"kraus": [{{"rows":2,"cols":2,"data":[[0.5,0],[0,0],[0,0],[1,0]]}}],
                             "in_layout": {{"factors": [["B",2]]}}, "out_layout": {{"factors": [["C",2]]}}}},
                "hash_table": [0, 1]}}"#
        ),
    );
    assert_eq!(run(&["protocol", s(&p)]).status.code(), Some(3));
}

#[test]
fn plus_state_protocol_and_distiller() {
    let dir = tempfile::tempdir().unwrap();
    let plus = plus_protocol(dir.path());
    let v = run_json(&["protocol", s(&plus), "--eps", "0.05"]);
    assert!(v["d_sec"].as_f64().unwrap() < 1e-9);
    assert_eq!(v["log_L"].as_f64().unwrap(), 1.0);
    assert!(v["certificates"].as_array().unwrap().iter().all(|c| c["verdict"] == true));

    let v = run_json(&["distill", s(&plus), "--eps", "0.05"]);
    assert!(v["error_P"].as_f64().unwrap() < 1e-9);
    let cert = &v["distiller"]["certificates"][0];
    assert_eq!(cert["class_name"], "DIIO");
    assert_eq!(cert["verdict"], true);
}

#[test]
fn emitted_certificate_is_reproducible_from_emitted_channel() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "skew.json", r#"{"state": {"vector": [[0.8,0],[0.6,0]]}, "hash_table": [0, 1]}"#);
    let v = run_json(&["distill", s(&p)]);
    let ch: KrausChannel = serde_json::from_value(v["distiller"]["channel"].clone()).unwrap();
    ch.validate().unwrap();
    let again = serde_json::to_value(check_diio(&ch).unwrap()).unwrap();
    assert_eq!(again, v["distiller"]["certificates"][0]);
}

#[test]
fn assisted_bell() {
    let dir = tempfile::tempdir().unwrap();
    let bell = bell_protocol(dir.path());
    let v = run_json(&["assisted-distill", s(&bell), "--eps", "0.05"]);
    assert!(v["error_P"].as_f64().unwrap() < 1e-9);
    assert_eq!(v["distiller"]["certificates"][0]["class_name"], "QIP");
    assert_eq!(v["distiller"]["certificates"][0]["verdict"], true);
    let v = run_json(&["assisted-extract", s(&bell), "--eps", "0.05"]);
    assert_eq!(v["log_L"].as_f64().unwrap(), 1.0);
    // Tracing out A hands Bob's partner to the adversary.
    let v = run_json(&["alt-extract", s(&bell), "--eps", "0.05"]);
    assert_eq!(v["log_L"].as_f64().unwrap(), 0.0);
}

#[test]
fn unmet_secrecy_target_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "skew.json", r#"{"state": {"vector": [[0.9,0],[0.43588989435406733,0]]}, "hash_table": [0, 1]}"#);
    let out = run(&["distill", s(&p), "--eps", "0.01"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("precondition"));
}

#[test]
fn large_register_needs_sampled_hashing() {
    let dir = tempfile::tempdir().unwrap();
    let amp = 1.0 / 7f64.sqrt();
    let vec: Vec<String> = (0..7).map(|_| format!("[{amp},0]")).collect();
    let p = write(dir.path(), "seven.json", &format!(r#"{{"state": {{"vector": [{}]}}}}"#, vec.join(",")));
    assert_eq!(run(&["protocol", s(&p), "--eps", "0.1"]).status.code(), Some(4));
    let v = run_json(&["protocol", s(&p), "--eps", "0.1", "--sampled-hash", "--seed", "3"]);
    assert_eq!(v["search"]["sampled"], true);
    assert!(v["d_sec"].as_f64().unwrap() <= 0.1 + 1e-9);
}

#[test]
fn hashing_bounds_on_request() {
    let dir = tempfile::tempdir().unwrap();
    let plus = plus_protocol(dir.path());
    let v = run_json(&["protocol", s(&plus), "--eps", "0.3", "--eta", "0.15"]);
    assert_eq!(v["hashing_bounds"]["holds"], true);
}

fn csv_column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let k = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(k).unwrap().parse().unwrap()).collect()
}

#[test]
fn sweeps_and_strong_converse() {
    let dir = tempfile::tempdir().unwrap();
    let plus = write(dir.path(), "plus.json", &format!(r#"{{"vector": [[{H},0],[{H},0]]}}"#));
    let eps = format!("{}", 0.5f64.sqrt());
    let out = run(&["sweep", s(&plus), "--eps", &eps, "--n", "1,2,3,5"]);
    assert!(out.status.success());
    let csv = String::from_utf8(out.stdout).unwrap();
    assert!(csv.starts_with("# cohdist "));
    let so = csv_column(&csv, "second_order_bits");
    for (got, n) in so.iter().zip([1.0, 2.0, 3.0, 5.0]) {
        assert!((got - n).abs() < 1e-9, "{got} vs {n}");
    }

    let diag = write(dir.path(), "diag.json", r#"{"matrix": {"rows":2,"cols":2,"data":[[0.7,0],[0,0],[0,0],[0.3,0]]}}"#);
    let out = run(&["sweep", s(&diag), "--eps", "0.5", "--n", "1,2,4"]);
    let csv = String::from_utf8(out.stdout).unwrap();
    assert!(csv_column(&csv, "second_order_bits").iter().all(|v| v.abs() < 1e-12));

    let q = write(dir.path(), "q.json", r#"{"matrix": {"rows":2,"cols":2,"data":[[0.7,0],[0.3,0],[0.3,0],[0.3,0]]}}"#);
    let out = run(&["strong-converse", s(&q), "--rate", "0.6", "--n", "10,20,40,80,160"]);
    let b = csv_column(&String::from_utf8(out.stdout).unwrap(), "eps_lower_bound");
    assert!(b.windows(2).all(|w| w[1] > w[0]), "{b:?}");
}

#[test]
fn verify_relations_on_ghz() {
    let dir = tempfile::tempdir().unwrap();
    let mut amps = vec!["[0,0]".to_string(); 8];
    amps[0] = format!("[{H},0]");
    amps[7] = format!("[{H},0]");
    let p = write(
        dir.path(),
        "ghz.json",
        &format!(r#"{{"vector": [{}], "layout": {{"factors": [["R",2],["A",2],["B",2]]}}}}"#, amps.join(",")),
    );
    let v = run_json(&["verify-relations", s(&p)]);
    assert!(v["d_residual"].as_f64().unwrap() < 1e-8);
    assert!(v["v_residual"].as_f64().unwrap() < 1e-8);
}

#[test]
fn outputs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let bell = bell_protocol(dir.path());
    let a = run(&["assisted-extract", s(&bell), "--eps", "0.2"]).stdout;
    let b = run(&["assisted-extract", s(&bell), "--eps", "0.2"]).stdout;
    assert_eq!(a, b);
}

#[test]
fn quick_selftest_is_deterministic_and_injection_fails() {
    let start = std::time::Instant::now();
    let a = run(&["selftest", "--quick", "--seed", "5"]);
    assert!(start.elapsed().as_secs() < 60, "quick selftest took {:?}", start.elapsed());
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let b = run(&["selftest", "--quick", "--seed", "5"]);
    assert_eq!(a.stdout, b.stdout);
    let report: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(report["passed"], true);
    assert_eq!(report["checks"].as_array().unwrap().len(), 11);

    let c = run(&["selftest", "--quick", "--seed", "5", "--inject-failure", "3"]);
    assert_eq!(c.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&c.stderr).contains("[FAIL]  3"));
}
