use std::fs;
use std::process::{Command, Output};

use abelfn_core::apps::ckp::FlowData;
use serde_json::Value;

fn abelfn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_abelfn")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// Last stdout line parsed as JSON (the summary for batch commands).
fn summary(o: &Output) -> Value {
    serde_json::from_str(stdout(o).lines().last().expect("summary line")).unwrap()
}

const THETA_INPUT: &str = r#"{"characteristic":{"a":[[1,2]],"b":[[0,1]]},"z":[[0.2,0.1]],
    "omega":{"rows":1,"cols":1,"data":[[0.0,1.0]]}}"#;

#[test]
fn theta_eval_prints_value_and_bound() {
    let o = abelfn(&["theta-eval", "--input", THETA_INPUT]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = summary(&o);
    assert_eq!(v["value"].as_array().unwrap().len(), 2);
    assert!(v["tail_bound"].as_f64().unwrap() <= 1e-10);
}

#[test]
fn theta_eval_csv_format() {
    let o = abelfn(&["theta-eval", "--input", THETA_INPUT, "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("re,im,tail_bound\n"));
}

#[test]
fn theta_eval_rejects_bad_period_matrix() {
    let input = r#"{"characteristic":{"a":[[0,1]],"b":[[0,1]]},"z":[[0,0]],
        "omega":{"rows":1,"cols":1,"data":[[0.0,-1.0]]}}"#;
    let o = abelfn(&["theta-eval", "--input", input]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("NotPositiveDefinite"), "{}", stderr(&o));
}

#[test]
fn theta_eval_rejects_tolerance_out_of_range() {
    let o = abelfn(&["theta-eval", "--input", THETA_INPUT, "--tol", "1e-20"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn generated_instance_verifies_and_corruption_fails() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst.json");
    let inst = inst.to_str().unwrap();
    let o = abelfn(&["gen-instance", "--kind", "prym", "--g", "1", "--n", "1", "--seed", "2", "--output", inst]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let o = abelfn(&["expand-verify", "--input", inst, "--samples", "5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s = summary(&o);
    assert_eq!(s["pass"], Value::Bool(true));
    assert!(s["max_rel_err"].as_f64().unwrap() <= 1e-8);
    assert_eq!(stdout(&o).lines().count(), 6);

    // Moving Ω̃₁₁ by 1e-3 breaks compatibility for this instance.
    let mut doc: Value = serde_json::from_str(&fs::read_to_string(inst).unwrap()).unwrap();
    let re = doc["big_omega"]["data"][0][0].as_f64().unwrap();
    doc["big_omega"]["data"][0][0] = Value::from(re + 1e-3);
    let bad = dir.path().join("bad.json");
    fs::write(&bad, doc.to_string()).unwrap();
    let o = abelfn(&["expand-verify", "--input", bad.to_str().unwrap(), "--samples", "5"]);
    assert_eq!(o.status.code(), Some(1));
    let s = summary(&o);
    assert_eq!(s["pass"], Value::Bool(false));
    assert!(s["compat_residual"].as_f64().unwrap() > 1e-6);
}

#[test]
fn generic_instance_with_polarization() {
    let o = abelfn(&["gen-instance", "--kind", "generic", "--n", "2", "--gtilde", "3", "--delta", "1,2", "--twist"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let doc: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(doc["kind"]["generic"]["g_tilde"], Value::from(3));
    let o = abelfn(&["expand-verify", "--input", &stdout(&o), "--samples", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn gen_instance_argument_errors() {
    assert_eq!(abelfn(&["gen-instance", "--kind", "prym", "--n", "1"]).status.code(), Some(2));
    assert_eq!(abelfn(&["gen-instance", "--kind", "generic", "--n", "0", "--gtilde", "2"]).status.code(), Some(2));
    assert_eq!(
        abelfn(&["gen-instance", "--kind", "prym", "--g", "1", "--n", "1", "--twist"]).status.code(),
        Some(2)
    );
}

#[test]
fn expand_verify_rejects_missing_file() {
    let o = abelfn(&["expand-verify", "--input", "/nonexistent/instance.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn toda_default_start_leaves_positive_chart() {
    let o = abelfn(&["toda-run"]);
    assert_eq!(o.status.code(), Some(1));
    let s = summary(&o);
    assert_eq!(s["error"], Value::from("PositivityLost"));
    let t = s["t"].as_f64().unwrap();
    assert!((1.6..1.8).contains(&t), "{t}");
}

#[test]
fn toda_mirrored_start_conserves_and_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("toda.csv");
    let o = abelfn(&["toda-run", "--x0", "-1,-1,-1", "--tend", "3", "--samples", "31", "--output", csv.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s = summary(&o);
    assert_eq!(s["mode"], Value::from("matrix_flow"));
    assert!(s["max_drift"].as_f64().unwrap() <= 1e-8);
    assert!(stderr(&o).contains("warning"));
    let text = fs::read_to_string(csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,x1,x2,x3,y1,y2,y3,H1,H2,H3,H4"));
    assert_eq!(lines.count(), 31);
}

#[test]
fn toda_consistent_diagonal_uses_state_matrices() {
    let o = abelfn(&["toda-run", "--x0", "-1,-1,-1", "--tend", "2", "--diagonal", "cartan-consistent"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(summary(&o)["mode"], Value::from("state_matrices"));
}

#[test]
fn toda_rejects_invalid_states() {
    assert_eq!(abelfn(&["toda-run", "--x0", "0,1,1"]).status.code(), Some(2));
    assert_eq!(abelfn(&["toda-run", "--x0", "1,-1,1"]).status.code(), Some(2));
    assert_eq!(abelfn(&["toda-run", "--x0", "1,1"]).status.code(), Some(2));
    assert_eq!(abelfn(&["toda-run", "--rtol", "1e-2"]).status.code(), Some(2));
}

#[test]
fn ckp_compare_synthetic_data() {
    let o = abelfn(&["ckp-compare", "--g", "1", "--n", "2", "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s = summary(&o);
    assert!(s["max_rel_err"].as_f64().unwrap() <= 1e-7);
    assert_eq!(s["samples"], Value::from(5));
}

#[test]
fn ckp_compare_rejects_malformed_flow_data() {
    let data = FlowData::synthetic(1, 1, 2, 0).unwrap();
    let base = serde_json::to_value(&data).unwrap();

    let mut doc = base.clone();
    let re = doc["u_vecs"][0][2][0].as_f64().unwrap();
    doc["u_vecs"][0][2][0] = Value::from(re + 0.25);
    let o = abelfn(&["ckp-compare", "--input", &doc.to_string()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("PrymShapeViolation"), "{}", stderr(&o));

    let mut doc = base;
    let re = doc["big_omega"]["data"][1][0].as_f64().unwrap();
    doc["big_omega"]["data"][1][0] = Value::from(re + 0.25);
    doc["big_omega"]["data"][3][0] = Value::from(re + 0.25);
    let o = abelfn(&["ckp-compare", "--input", &doc.to_string()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("CompatibilityViolation"), "{}", stderr(&o));
}
