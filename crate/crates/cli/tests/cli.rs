use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn lqss(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lqss")).args(args).output().expect("binary runs")
}

fn stderr_error(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().rev().find(|l| l.starts_with('{')).unwrap_or_else(|| panic!("no JSON on stderr: {text}"));
    serde_json::from_str::<Value>(line).unwrap()["error"].clone()
}

fn synth(model: &str, dir: &Path) -> PathBuf {
    let out_path = dir.join(format!("{model}.netlist.json"));
    let out = lqss(&["synth", "--input", fixture(model).to_str().unwrap(), "--output", out_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    out_path
}

#[test]
fn example1_synth_and_verify() {
    let dir = tempfile::tempdir().unwrap();
    let net = synth("example1_passive.json", dir.path());
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&net).unwrap()).unwrap();
    let cavities = doc["cavities"].as_array().unwrap();
    assert_eq!(cavities.len(), 3);
    assert_eq!(cavities.iter().filter(|c| !c["ports"].as_array().unwrap().is_empty()).count(), 2);
    assert_eq!(doc["feedback"]["R"].as_array().unwrap().len(), 3);

    let report = dir.path().join("report.json");
    let out = lqss(&[
        "verify",
        "--model",
        fixture("example1_passive.json").to_str().unwrap(),
        "--netlist",
        net.to_str().unwrap(),
        "--tol",
        "1e-8",
        "--check",
        "--report",
        report.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let rep: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(rep["report"]["pass"], Value::Bool(true));
    assert_eq!(rep["report"]["frequencies"].as_array().unwrap().len(), 20);
}

#[test]
fn single_frequency_report() {
    let dir = tempfile::tempdir().unwrap();
    let net = synth("example1_passive.json", dir.path());
    let out = lqss(&[
        "verify",
        "--model",
        fixture("example1_passive.json").to_str().unwrap(),
        "--netlist",
        net.to_str().unwrap(),
        "--freqs",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let rep: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(rep["report"]["frequencies"].as_array().unwrap().len(), 1);
}

#[test]
fn perturbed_feedback_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let net = synth("example1_passive.json", dir.path());
    let mut doc: Value = serde_json::from_str(&std::fs::read_to_string(&net).unwrap()).unwrap();
    let v = doc["feedback"]["R"][0][1][0].as_f64().unwrap();
    doc["feedback"]["R"][0][1][0] = Value::from(v + 1e-3);
    std::fs::write(&net, doc.to_string()).unwrap();
    let out = lqss(&[
        "verify",
        "--model",
        fixture("example1_passive.json").to_str().unwrap(),
        "--netlist",
        net.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let rep: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(rep["report"]["max_error"].as_f64().unwrap() > 1e-5);
    assert!(String::from_utf8_lossy(&out.stderr).contains("max_error"));

    // the schedule no longer reconstructs the perturbed R
    let out = lqss(&[
        "verify",
        "--model",
        fixture("example1_passive.json").to_str().unwrap(),
        "--netlist",
        net.to_str().unwrap(),
        "--check",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_error(&out)["at"], "feedback.schedule");
}

#[test]
fn example2_general_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let net = synth("example2_general.json", dir.path());
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&net).unwrap()).unwrap();
    let cav = doc["cavities"].as_array().unwrap();
    assert_eq!(cav.len(), 2);
    let roles: Vec<&str> = cav.iter().map(|c| c["role"].as_str().unwrap()).collect();
    assert!(roles.contains(&"plus_eigen") && roles.contains(&"minus_eigen"), "{roles:?}");
    assert_eq!(doc["feedback"]["R"].as_array().unwrap().len(), 4);
    let out = lqss(&[
        "verify",
        "--model",
        fixture("example2_general.json").to_str().unwrap(),
        "--netlist",
        net.to_str().unwrap(),
        "--tol",
        "1e-7",
        "--check",
    ]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn unsupported_inputs_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    for (model, kind) in
        [("jordan3_general.json", "unsupported_structure"), ("ppflat_nonzero_general.json", "degeneracy")]
    {
        let out = lqss(&[
            "synth",
            "--input",
            fixture(model).to_str().unwrap(),
            "--output",
            dir.path().join("x.json").to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(3), "{model}");
        let err = stderr_error(&out);
        assert_eq!(err["kind"], kind);
        assert_eq!(err["exit_code"], 3);
    }
}

#[test]
fn malformed_model_exit_2_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let mut doc: Value =
        serde_json::from_str(&std::fs::read_to_string(fixture("example1_passive.json")).unwrap()).unwrap();
    doc["M"][2][0] = Value::from(vec![9.0, 0.0]);
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, doc.to_string()).unwrap();
    let out =
        lqss(&["synth", "--input", bad.to_str().unwrap(), "--output", dir.path().join("x.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_error(&out);
    assert_eq!(err["kind"], "format");
    assert_eq!(err["at"], "M[0][2]");

    std::fs::write(&bad, "{\"schema_version\": 1, \"type\": \"passive\"").unwrap();
    let out =
        lqss(&["synth", "--input", bad.to_str().unwrap(), "--output", dir.path().join("x.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let out = lqss(&["synth", "--input", dir.path().join("missing.json").to_str().unwrap(), "--output", "x.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_error(&out)["kind"], "io");
}

#[test]
fn decompose_commands() {
    let dir = tempfile::tempdir().unwrap();
    let sched = dir.path().join("s.json");
    let out = lqss(&[
        "decompose",
        "--input",
        fixture("identity3.json").to_str().unwrap(),
        "--output",
        sched.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&sched).unwrap()).unwrap();
    assert!(doc["devices"].as_array().unwrap().is_empty());

    let out = lqss(&[
        "decompose",
        "--input",
        fixture("bogoliubov3.json").to_str().unwrap(),
        "--kind",
        "bogoliubov",
        "--output",
        sched.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    let res: f64 = stdout.lines().find_map(|l| l.strip_prefix("reconstruction residual: ")).unwrap().parse().unwrap();
    assert!(res < 1e-8);

    // a Bogoliubov matrix with squeezing is not unitary
    let out = lqss(&[
        "decompose",
        "--input",
        fixture("bogoliubov3.json").to_str().unwrap(),
        "--kind",
        "unitary",
        "--output",
        sched.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn empty_coupling_model() {
    let dir = tempfile::tempdir().unwrap();
    let mut doc: Value =
        serde_json::from_str(&std::fs::read_to_string(fixture("example1_passive.json")).unwrap()).unwrap();
    doc["N"] = serde_json::json!(vec![vec![[0.0, 0.0]; 3]; 3]);
    let model = dir.path().join("zero.json");
    std::fs::write(&model, doc.to_string()).unwrap();
    let net = dir.path().join("zero.netlist.json");
    let out = lqss(&["synth", "--input", model.to_str().unwrap(), "--output", net.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let nd: Value = serde_json::from_str(&std::fs::read_to_string(&net).unwrap()).unwrap();
    assert!(nd["cavities"].as_array().unwrap().iter().all(|c| c["role"] == "interconnect_only"));
    let out = lqss(&["verify", "--model", model.to_str().unwrap(), "--netlist", net.to_str().unwrap(), "--check"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn detuning_and_kappa_flags() {
    let dir = tempfile::tempdir().unwrap();
    let det = dir.path().join("d.json");
    std::fs::write(&det, "[0.5, -0.25, 1.0]").unwrap();
    let net = dir.path().join("n.json");
    let out = lqss(&[
        "synth",
        "--input",
        fixture("example1_passive.json").to_str().unwrap(),
        "--output",
        net.to_str().unwrap(),
        "--detuning-file",
        det.to_str().unwrap(),
        "--interconnect-kappa",
        "2.0",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let nd: Value = serde_json::from_str(&std::fs::read_to_string(&net).unwrap()).unwrap();
    assert_eq!(nd["cavities"][1]["detuning"], -0.25);
    assert!((nd["realization"]["n_tilde"][0].as_f64().unwrap() - 2f64.sqrt()).abs() < 1e-15);
    let out = lqss(&[
        "verify",
        "--model",
        fixture("example1_passive.json").to_str().unwrap(),
        "--netlist",
        net.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));

    let out = lqss(&[
        "synth",
        "--input",
        fixture("example1_passive.json").to_str().unwrap(),
        "--output",
        net.to_str().unwrap(),
        "--interconnect-kappa",
        "1,2",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_error(&out)["kind"], "parameter");
}
