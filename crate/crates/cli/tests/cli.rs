use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use vcausal_core::certifier::s_program;
use vcausal_core::io::{behavior_to_json, config_to_json, parse_behavior, parse_quantum_model};
use vcausal_core::lp::{verify, Certificate};
use vcausal_core::num_rational::BigRational;
use vcausal_core::spacetime::{four_party_config, C};
use vcausal_core::{build_paper_model, dc_behavior_fig3, Behavior, InequalityS, Prob};

fn vcausal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vcausal")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Value of the report line `name = value`.
fn quantity(out: &str, name: &str) -> String {
    out.lines()
        .find_map(|l| {
            let (lhs, rhs) = l.split_once(" = ")?;
            (lhs.split_once("] ")?.1.trim() == name).then(|| rhs.trim().to_string())
        })
        .unwrap_or_else(|| panic!("no quantity {name:?} in\n{out}"))
}

fn json_report(args: &[&str]) -> (Value, i32) {
    let mut all = vec!["--json"];
    all.extend_from_slice(args);
    let o = vcausal(&all);
    (serde_json::from_slice(&o.stdout).expect("json report"), o.status.code().unwrap())
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn quantum_s_default() {
    let o = vcausal(&["quantum-s"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let s: f64 = quantity(&out, "S (operator path)").parse().unwrap();
    assert_eq!(format!("{s:.1}"), "7.2");
    assert_eq!(quantity(&out, "S (operator path)"), quantity(&out, "S (behavior path)"));
    assert_eq!(out.lines().filter(|l| l.starts_with("[quantum")).count(), 23);
}

#[test]
fn quantum_s_rational_prints_fraction() {
    let out = stdout(&vcausal(&["--rational", "quantum-s"]));
    let exact = quantity(&out, "S (exact, binary behavior)");
    assert!(exact.contains('/'));
}

#[test]
fn product_state_file() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("state.json");
    let mut amps = vec!["0".to_string(); 16];
    amps[0] = "1".into();
    let text = format!("{{\"amplitudes\": [{}]}}", amps.join(", "));
    std::fs::write(&file, &text).unwrap();

    let o = vcausal(&["quantum-s", "--state-file", path_str(&file)]);
    let q = parse_quantum_model(&text).unwrap();
    let expected = InequalityS::four_party().evaluate(&q.behavior(), &1e-9).unwrap();
    let printed: f64 = quantity(&stdout(&o), "S (behavior path)").parse().unwrap();
    assert!((printed - expected).abs() < 1e-9);
    // the product state cannot exceed the local bound
    assert!(expected <= 7.0);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn dumped_behavior_reimports_identically() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("q.beh");
    let o = vcausal(&["quantum-s", "--dump-behavior", path_str(&file)]);
    assert_eq!(o.status.code(), Some(0));
    let original = build_paper_model().behavior();
    let back: Behavior<f64> = parse_behavior(&std::fs::read_to_string(&file).unwrap(), &1e-9).unwrap();
    assert_eq!(back, original);
    let s = InequalityS::four_party();
    assert_eq!(s.evaluate(&back, &1e-9).unwrap(), s.evaluate(&original, &1e-9).unwrap());

    let check = stdout(&vcausal(&["check-behavior", path_str(&file)]));
    assert_eq!(quantity(&check, "S"), quantity(&stdout(&o), "S (behavior path)"));
}

#[test]
fn rational_dump_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("q.beh");
    vcausal(&["--rational", "quantum-s", "--dump-behavior", path_str(&file)]);
    let back: Behavior<BigRational> =
        parse_behavior(&std::fs::read_to_string(&file).unwrap(), &BigRational::from_f64(1e-9)).unwrap();
    assert_eq!(back, build_paper_model().behavior().to_rational());
}

#[test]
fn certify_bound_default() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("cert.json");
    let o = vcausal(&["certify-bound", "--certificate-out", path_str(&file)]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert_eq!(quantity(&out, "optimum"), "7/1");
    assert_eq!(quantity(&out, "certificate"), "verified");
    let cert: Certificate = serde_json::from_str(&std::fs::read_to_string(&file).unwrap()).unwrap();
    verify(&s_program(true), &cert).unwrap();
}

#[test]
fn certify_bound_ns_only() {
    let o = vcausal(&["certify-bound", "--ns-only"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(quantity(&stdout(&o), "optimum"), "9/1");
}

#[test]
fn certify_bound_quantum_marginals() {
    let o = vcausal(&["certify-bound", "--marginals-from-quantum", "--radius", "0"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert_eq!(quantity(&out, "status"), "INFEASIBLE");
    assert_eq!(quantity(&out, "certificate"), "verified");
}

fn uniform_file(dir: &Path, entry: &str) -> String {
    let mut table = serde_json::Map::new();
    for s in 0..16 {
        let key = format!("{},{},{},{}", s >> 3 & 1, s >> 2 & 1, s >> 1 & 1, s & 1);
        table.insert(key, Value::Array(vec![Value::String(entry.into()); 16]));
    }
    let doc = serde_json::json!({"parties": 4, "settings": [2, 2, 2, 2], "outcomes": [2, 2, 2, 2], "table": table});
    let file = dir.join("uniform.json");
    std::fs::write(&file, doc.to_string()).unwrap();
    file.to_str().unwrap().to_string()
}

#[test]
fn check_uniform_behavior() {
    let dir = tempfile::tempdir().unwrap();
    let file = uniform_file(dir.path(), "1/16");
    for flags in [vec![], vec!["--rational"]] {
        let mut args = flags.clone();
        args.extend(["check-behavior", file.as_str()]);
        let o = vcausal(&args);
        assert_eq!(o.status.code(), Some(0));
        let out = stdout(&o);
        assert_eq!(quantity(&out, "S"), "0");
        assert_eq!(quantity(&out, "nonlocal 2-party conditionals"), "0");
        assert!(!out.contains("FAIL"));
    }
}

#[test]
fn negative_probability_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let file = uniform_file(dir.path(), "1/16");
    let text = std::fs::read_to_string(&file).unwrap().replacen("\"1/16\"", "\"-1/16\"", 1);
    std::fs::write(&file, text).unwrap();
    let o = vcausal(&["check-behavior", &file]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("table[\"0,0,0,0\"][0]") && err.contains("negative"), "{err}");
}

#[test]
fn exported_dc_behavior_signals() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("dc.json");
    std::fs::write(&file, behavior_to_json(&dc_behavior_fig3(&build_paper_model()).unwrap())).unwrap();
    let o = vcausal(&["check-behavior", path_str(&file)]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    let entries: usize = quantity(&out, "signalling entries").parse().unwrap();
    assert!(entries > 0);
    assert!(out.contains("FAIL no-signalling"));
    assert!(out.contains("BCD marginal depends on A's setting"));
}

#[test]
fn ghz_one_round() {
    let o = vcausal(&["ghz-protocol", "--rounds", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert_eq!(quantity(&out, "analytic success (uniform prior)"), "3/4");
    assert_eq!(quantity(&out, "errors | yes"), "0");
    let speed: f64 = quantity(&out, "effective signalling speed / c").parse().unwrap();
    assert!(speed > 1.0 && speed < 10.0);
}

#[test]
fn speed_bound_rest_frame() {
    let o = vcausal(&["speed-bound", "--d", "18e3", "--dt", "3.6e-10"]);
    assert_eq!(o.status.code(), Some(0));
    let ratio: f64 = quantity(&stdout(&o), "v_min / c (lab frame)").parse().unwrap();
    let oracle = 18e3 / (C * 3.6e-10);
    assert!((ratio - oracle).abs() / oracle < 1e-11);
    assert!((ratio / 1.7e5 - 1.0).abs() < 0.05);
}

#[test]
fn speed_bound_scan_marks_minimum() {
    let o = vcausal(&["speed-bound", "--d", "18e3", "--dt", "3.6e-10", "--scan", "--beta-max", "0.00123"]);
    let out = stdout(&o);
    assert_eq!(out.matches("<- minimum").count(), 1);
    let frames: usize = quantity(&out, "frames scanned").parse().unwrap();
    assert_eq!(frames, 1 + 3 * 4 * 8);
    let min: f64 = quantity(&out, "min v_min / c over frames").parse().unwrap();
    let rest: f64 = quantity(&out, "v_min / c (lab frame)").parse().unwrap();
    assert!(min <= rest);
}

#[test]
fn validate_config_files() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.json");
    let bad = dir.path().join("bad.json");
    std::fs::write(&good, config_to_json(&four_party_config(3.0 * C, 1.4).unwrap())).unwrap();
    std::fs::write(&bad, config_to_json(&four_party_config(3.0 * C, 1.6).unwrap())).unwrap();
    assert_eq!(vcausal(&["validate-config", path_str(&good)]).status.code(), Some(0));
    let o = vcausal(&["validate-config", path_str(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL D v-connected to B"));
}

#[test]
fn json_report_is_tagged_and_reproducible() {
    let (a, code) = json_report(&["--seed", "5", "ghz-protocol", "--rounds", "3", "--trials", "2000"]);
    let (b, _) = json_report(&["--seed", "5", "ghz-protocol", "--rounds", "3", "--trials", "2000"]);
    assert_eq!(code, 0);
    assert_eq!(a["inputs_digest"], b["inputs_digest"]);
    assert_eq!(a["quantities"], b["quantities"]);
    assert_eq!(a["seed"], 5);
    assert_eq!(a["inputs_digest"].as_str().unwrap().len(), 64);
    for q in a["quantities"].as_array().unwrap() {
        assert!(!q["module"].as_str().unwrap().is_empty());
    }
    let (c, _) = json_report(&["--seed", "6", "ghz-protocol", "--rounds", "3", "--trials", "2000"]);
    assert_ne!(a["inputs_digest"], c["inputs_digest"]);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(vcausal(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(vcausal(&["speed-bound", "--d", "abc", "--dt", "1"]).status.code(), Some(2));
    assert_eq!(vcausal(&["ghz-protocol", "--rounds", "0"]).status.code(), Some(2));
    assert_eq!(vcausal(&["check-behavior", "/nonexistent/file.json"]).status.code(), Some(2));
}
