use std::fs;
use std::path::Path;

use lmi_codesign::cli::run;
use serde_json::Value;
use sha2::{Digest, Sha256};

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(name)
        .display()
        .to_string()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn manifest(out: &Path) -> Value {
    let mut name = out.file_name().unwrap().to_os_string();
    name.push(".manifest.json");
    read_json(&out.with_file_name(name))
}

fn arg(p: &Path) -> String {
    p.display().to_string()
}

#[test]
fn analyze_then_simulate() {
    let dir = tempfile::tempdir().unwrap();
    let bound = dir.path().join("bound.json");
    let code = run([
        "codesign",
        "analyze",
        "--system",
        &data("case_study.json"),
        "--gains",
        &data("gains_h2.json"),
        "--out",
        &arg(&bound),
    ]);
    assert_eq!(code, 0);
    let b = read_json(&bound);
    assert!((b["objective"].as_f64().unwrap() - 330.7142).abs() < 1e-3);
    assert_eq!(b["q_x"].as_array().unwrap().len(), 2);
    let csv = fs::read_to_string(dir.path().join("ellipse.csv")).unwrap();
    assert!(csv.starts_with("theta,x1,x2\n"));

    let m = manifest(&bound);
    assert_eq!(m["command"], "analyze");
    let digest: String = Sha256::digest(fs::read(data("case_study.json")).unwrap())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect();
    assert_eq!(m["inputs"][0]["sha256"], Value::String(digest));
    assert_eq!(m["config"]["plant"]["detector"]["false_alarm_rate"], 0.05);

    let trace = dir.path().join("trace.csv");
    let code = run([
        "codesign",
        "--jobs",
        "1",
        "simulate",
        "--system",
        &data("case_study.json"),
        "--gains",
        &data("gains_h2.json"),
        "--seed",
        "9",
        "--steps",
        "3000",
        "--attack",
        "zero-alarm",
        "--policy",
        "fixed-direction",
        "--direction",
        "0.6,0.8",
        "--truncate",
        "--bound",
        &arg(&bound),
        "--out",
        &arg(&trace),
    ]);
    assert_eq!(code, 0);
    let summary = read_json(&dir.path().join("trace.csv.summary.json"));
    assert_eq!(summary["alarm_count"], 0);
    assert_eq!(summary["containment_violations"], 0);
    let text = fs::read_to_string(&trace).unwrap();
    assert!(text.starts_with("k,x1,x2,xhat1,xhat2,z,alarm\n"));
    assert_eq!(text.lines().count(), 3001);
    assert_eq!(manifest(&trace)["inputs"].as_array().unwrap().len(), 3);

    // Same seed, same trace.
    let again = dir.path().join("again.csv");
    let args: Vec<String> = [
        "codesign",
        "simulate",
        "--system",
        &data("case_study.json"),
        "--gains",
        &data("gains_h2.json"),
        "--seed",
        "9",
        "--steps",
        "3000",
        "--attack",
        "zero-alarm",
        "--policy",
        "fixed-direction",
        "--direction",
        "0.6,0.8",
        "--truncate",
        "--out",
        &arg(&again),
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    assert_eq!(run(args), 0);
    assert_eq!(fs::read(&trace).unwrap(), fs::read(&again).unwrap());
}

#[test]
fn h2_design_reports_range() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("h2.json");
    assert_eq!(
        run([
            "codesign",
            "design-h2",
            "--system",
            &data("case_study.json"),
            "--out",
            &arg(&out)
        ]),
        0
    );
    let v = read_json(&out);
    assert!((v["result"]["gamma_star"].as_f64().unwrap() - 1.5705).abs() < 1e-3);
    assert!((v["gamma_open_loop"].as_f64().unwrap() - 10.1874).abs() < 1e-3);
    assert_eq!(v["result"]["selected"]["L"].as_array().unwrap().len(), 2);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = arg(&dir.path().join("x.json"));
    assert_eq!(run(["codesign", "--help"]), 0);
    assert_eq!(run(["codesign", "analyze", "--system", "a.json"]), 2);
    assert_eq!(run(["codesign", "frobnicate"]), 2);
    // Unreadable input is a domain failure, not a usage error.
    assert_eq!(
        run([
            "codesign",
            "design-h2",
            "--system",
            "/nonexistent.json",
            "--out",
            &out
        ]),
        1
    );
    // Invalid attack parameters are argument errors.
    let code = run([
        "codesign",
        "simulate",
        "--system",
        &data("case_study.json"),
        "--gains",
        &data("gains_h2.json"),
        "--seed",
        "1",
        "--steps",
        "500",
        "--attack",
        "zero-alarm",
        "--scale",
        "1.5",
        "--out",
        &out,
    ]);
    assert_eq!(code, 2);
    // A ceiling below the optimum cannot be met.
    let code = run([
        "codesign",
        "design-iter",
        "--system",
        &data("case_study.json"),
        "--gamma-bar",
        "1.2",
        "--out",
        &out,
    ]);
    assert_eq!(code, 1);
}
