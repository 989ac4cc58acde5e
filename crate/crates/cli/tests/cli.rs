use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_krein-topo")).args(args).output().expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("krein-topo-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn first_line(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

#[test]
fn invariants_report_and_headers() {
    let dir = scratch("inv");
    let out = run(&["invariants", "harper", "--energy", "-1.9", "--out", dir.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["schema"], 1);
    assert_eq!(report["sig"], 3);
    assert_eq!(report["chern"], 3);
    assert_eq!(report["agree"], true);
    assert_eq!(report["crossings"].as_array().unwrap().len(), 3);
    assert_eq!(first_line(&dir.join("crossings.csv")), "k1,slope,multiplicity,nu_plus,nu_minus,theta_slope");
    let file: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.join("invariants.json")).unwrap()).unwrap();
    assert_eq!(file, report);
}

#[test]
fn spectrum_files_and_unit_circle() {
    let dir = scratch("spec");
    let out = run(&["spectrum", "harper", "--energy", "-2.2", "--n-k2", "11", "--out", dir.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert_eq!(first_line(&dir.join("spectrum.csv")), "k2,re,im");
    let rows = std::fs::read_to_string(dir.join("spectrum.csv")).unwrap().lines().count();
    assert_eq!(rows, 1 + 11 * 14);
    let svg = std::fs::read_to_string(dir.join("spectrum.svg")).unwrap();
    assert!(svg.contains("stroke-dasharray=\"2 3\""));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["in_gap"], false);
}

#[test]
fn numbers_carry_seventeen_digits() {
    let dir = scratch("digits");
    let out = run(&[
        "spectrum",
        "harper",
        "--energy",
        "-1.9",
        "--n-k2",
        "3",
        "--format",
        "json",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("\"energy\": -1.8999999999999999e0"), "{text}");
    assert!(!dir.join("spectrum.csv").exists());
}

#[test]
fn edge_bands_sweep_marks_band_energies() {
    let dir = scratch("bands");
    let out = run(&[
        "edge-bands",
        "harper",
        "--e-min",
        "-2.2",
        "--e-max",
        "-1.9",
        "--n-e",
        "2",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let csv = std::fs::read_to_string(dir.join("edge_bands.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("energy,status,k1,slope,multiplicity"));
    let rows: Vec<&str> = lines.collect();
    assert!(rows[0].contains("not in a bulk gap"), "{}", rows[0]);
    assert_eq!(rows.iter().filter(|r| r.contains(",gap,")).count(), 3);
}

#[test]
fn edge_phases_at_one_energy() {
    let dir = scratch("phases");
    let out = run(&["edge-bands", "did", "--energy", "0", "--n-k1", "41", "--out", dir.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert_eq!(first_line(&dir.join("edge_phases.csv")), "k1,index,phase");
    assert!(dir.join("edge_phases.svg").exists());
}

#[test]
fn classify_reports_the_kind() {
    let out = run(&["classify", "pip", "--format", "json", "--out", scratch("classify").to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["kind"], "(-1,1,-1)");
    assert_eq!(report["invariant_class"], "signature_and_secondary");
}

#[test]
fn classify_matrix_file() {
    let dir = scratch("matrix");
    std::fs::create_dir_all(&dir).unwrap();
    let file = dir.join("m.json");
    let (c, s) = (0.3f64.cos(), 0.3f64.sin());
    let (c2, s2) = (0.5f64.cos(), 0.5f64.sin());
    let text =
        format!(r#"{{"matrix": [[[{c}, {s}], [0, 0]], [[0, 0], [{c2}, {s2}]]], "fundamental": [[1, 0], [0, -1]]}}"#);
    std::fs::write(&file, text).unwrap();
    let out =
        run(&["classify", "--matrix-file", file.to_str().unwrap(), "--format", "json", "--out", dir.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["relations"]["j_unitary"], true);
    assert_eq!(report["unit_spectrum"].as_array().unwrap().len(), 2);
    assert_eq!(report["invariants"]["sig"], 0);
}

#[test]
fn collide_writes_traces() {
    let dir = scratch("collide");
    let out = run(&["collide", "o11_block", "--steps", "3", "--out", dir.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert_eq!(first_line(&dir.join("collide.csv")), "t,index,re,im,distance_to_circle");
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["scenario"]["scenario"], "o11_block");
    assert_eq!(report["steps"].as_array().unwrap().len(), 3);
}

#[test]
fn exit_codes() {
    let dir = scratch("codes");
    let d = dir.to_str().unwrap();
    assert_eq!(code(&run(&["invariants", "harper", "--energy", "-2.2", "--out", d])), 4);
    assert_eq!(code(&run(&["invariants", "harper", "--energy", "-1.9", "--mu", "1", "--out", d])), 3);
    assert_eq!(code(&run(&["invariants", "pip", "--energy", "0", "--chirality", "3", "--out", d])), 3);
    assert_eq!(code(&run(&["invariants", "harper", "--energy", "-1.9", "--format", "png", "--out", d])), 3);
    assert_eq!(code(&run(&["invariants", "--energy", "0", "--out", d])), 3);
    assert_eq!(code(&run(&["invariants", "--model-file", "/nonexistent.json", "--energy", "0", "--out", d])), 3);
    assert_eq!(code(&run(&["frobnicate"])), 3);
    assert_eq!(code(&run(&["--help"])), 0);
    let threads = Command::new(env!("CARGO_BIN_EXE_krein-topo"))
        .env("KREIN_TOPO_THREADS", "many")
        .args(["spectrum", "harper", "--energy", "-1.9", "--out", d])
        .output()
        .unwrap();
    assert_eq!(code(&threads), 3);
}

#[test]
fn model_file_round_trip() {
    let dir = scratch("model");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("harper.json");
    krein_topo::models::harper(3, 7).unwrap().save(&path).unwrap();
    let out = run(&[
        "invariants",
        "--model-file",
        path.to_str().unwrap(),
        "--energy",
        "-1.9",
        "--format",
        "json",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["sig"], 3);
}
