use std::path::Path;
use std::process::{Command, Output};

fn tfmseg(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tfmseg"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "status {:?}\nstderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn simulate_detect_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&tfmseg(
        d,
        &["simulate", "--scenario", "S1", "--T", "400", "--dims", "10,10,10", "--seed", "1", "--output", "s.tfts"],
    ));
    assert!(d.join("s.tfts.truth.json").exists());
    ok(&tfmseg(
        d,
        &["detect", "--input", "s.tfts", "--threshold", "8", "--ranks", "3,3,3", "--output", "r.json"],
    ));
    let out = tfmseg(
        d,
        &["evaluate", "--report", "r.json", "--truth", "s.tfts.truth.json", "--output", "m.csv"],
    );
    ok(&out);
    let csv = std::fs::read_to_string(d.join("m.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert!(header.contains(&"qdiff_0"));
    assert!(header.iter().any(|h| h.starts_with("accuracy_")));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row.len(), header.len());
    assert_eq!(row[0], "1");

    // Re-scoring the saved artifacts gives identical metrics.
    let again = tfmseg(d, &["evaluate", "--report", "r.json", "--truth", "s.tfts.truth.json"]);
    ok(&again);
    assert_eq!(String::from_utf8(again.stdout).unwrap(), csv);
}

#[test]
fn identify_reuses_report() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&tfmseg(
        d,
        &["simulate", "--scenario", "S2", "--T", "400", "--dims", "10,10,10", "--seed", "3", "--output", "s.csv"],
    ));
    ok(&tfmseg(
        d,
        &["detect", "--input", "s.csv", "--threshold", "8", "--ranks", "3,3,3", "--output", "r.json"],
    ));
    let out = tfmseg(
        d,
        &[
            "identify", "--input", "s.csv", "--report", "r.json", "--zeta-mult", "3.5",
            "--mode-informed", "--truth", "s.csv.truth.json",
        ],
    );
    ok(&out);
    let first: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("r.json")).unwrap()).unwrap();
    let second: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(first["mode_identification"], second["mode_identification"]);
    assert_eq!(first["change_points"], second["change_points"]);
    assert!(second["loadings"]["runs"].as_array().unwrap().len() >= 3);
}

#[test]
fn masked_input_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&tfmseg(
        d,
        &["simulate", "--scenario", "S1", "--T", "100", "--dims", "4,4,4", "--missing", "--output", "m.tfts"],
    ));
    let out = tfmseg(d, &["detect", "--input", "m.tfts"]);
    assert_eq!(out.status.code(), Some(5));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.starts_with("error[unsupported-missing]:"), "{err}");
    assert_eq!(err.lines().count(), 1);
}

#[test]
fn error_categories_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(tfmseg(d, &["detect"]).status.code(), Some(2));
    assert_eq!(tfmseg(d, &["detect", "--input", "absent.tfts"]).status.code(), Some(3));
    std::fs::write(d.join("bad.csv"), "t,i1,value\n1,1,1.0\n1,1,2.0\n").unwrap();
    let out = tfmseg(d, &["detect", "--input", "bad.csv"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8(out.stderr).unwrap().contains("line 3"));
    ok(&tfmseg(
        d,
        &["simulate", "--scenario", "S0", "--T", "100", "--dims", "4,4,4", "--output", "s.tfts"],
    ));
    let out = tfmseg(d, &["detect", "--input", "s.tfts", "--ranks", "9,1,1"]);
    assert_eq!(out.status.code(), Some(6));
}

#[test]
fn calibrate_pi_writes_five_coefficients() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = tfmseg(
        d,
        &[
            "calibrate", "--what", "pi", "--grid", "reduced", "--reps", "4", "--ts", "100,160,240",
            "--output", "pi.txt", "--details", "pi.json",
        ],
    );
    ok(&out);
    let text = std::fs::read_to_string(d.join("pi.txt")).unwrap();
    assert_eq!(text.lines().count(), 5);
    let coeffs = tfmseg::ThresholdCoefficients::parse(&text).unwrap();
    let details: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("pi.json")).unwrap()).unwrap();
    assert_eq!(details["cells"].as_array().unwrap().len(), 3 * 2 * 2);
    assert_eq!(details["coefficients"]["intercept"].as_f64().unwrap(), coeffs.intercept);

    // The file feeds straight back into detection.
    ok(&tfmseg(
        d,
        &["simulate", "--scenario", "S0", "--T", "100", "--dims", "4,4,4", "--output", "s.tfts"],
    ));
    ok(&tfmseg(d, &["detect", "--input", "s.tfts", "--pi-coeffs", "pi.txt"]));
}
