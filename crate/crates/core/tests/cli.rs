use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use hk_lab::experiments::{run_experiment, ExperimentSpec, DIAGNOSTICS_HEADER, SWEEP_HEADER};

fn hklab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hklab"))
        .args(args)
        .output()
        .unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_writes_csv_and_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("x.json");
    fs::write(&input, r#"{"n": 3, "d": 1, "coords": [[0], [1], [2]]}"#).unwrap();
    let csv = dir.path().join("steps.csv");
    let json = dir.path().join("tr.json");
    let out = hklab(&[
        "simulate",
        "--input",
        path(&input),
        "--mode",
        "exact",
        "--csv",
        path(&csv),
        "--json",
        path(&json),
        "--history",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let mut rdr = csv::Reader::from_path(&csv).unwrap();
    assert_eq!(
        rdr.headers().unwrap().iter().collect::<Vec<_>>(),
        DIAGNOSTICS_HEADER
    );
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0][1].parse::<f64>().unwrap(), 6.0);
    assert_eq!(rows[0][3].parse::<f64>().unwrap(), 0.5);
    assert_eq!(rows[0][7].parse::<f64>().unwrap(), 0.0);
    assert_eq!(&rows[1][10], "true");

    let tr: serde_json::Value = serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(tr["freezing_time"], 2);
    assert_eq!(tr["merge_times"], serde_json::json!([1]));

    let replay = hklab(&["verify", path(&json)]);
    assert!(
        replay.status.success(),
        "{}",
        String::from_utf8_lossy(&replay.stderr)
    );
}

#[test]
fn verify_rejects_a_tampered_recording() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("tr.json");
    let out = hklab(&[
        "simulate",
        "--family",
        "line",
        "--n",
        "6",
        "--spacing",
        "0.9",
        "--json",
        path(&json),
    ]);
    assert!(out.status.success());
    let mut tr: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    tr["freezing_time"] = serde_json::json!(tr["freezing_time"].as_u64().unwrap() + 1);
    fs::write(&json, tr.to_string()).unwrap();
    assert_eq!(hklab(&["verify", path(&json)]).status.code(), Some(1));
}

#[test]
fn verify_accepts_a_bare_state() {
    let dir = tempfile::tempdir().unwrap();
    let state = dir.path().join("x.json");
    let out = hklab(&[
        "generate",
        "--family",
        "random",
        "--n",
        "30",
        "--d",
        "3",
        "--seed",
        "7",
        "-o",
        path(&state),
    ]);
    assert!(out.status.success());
    let out = hklab(&["verify", path(&state)]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["n"], 30);
}

#[test]
fn malformed_input_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"n": 2, "d": 1, "coords": [[0]]}"#).unwrap();
    assert_eq!(hklab(&["verify", path(&bad)]).status.code(), Some(2));
    assert_eq!(
        hklab(&["simulate", "--family", "circle", "--n", "2", "--chord", "0.5"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn sweep_and_fit() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    fs::write(
        &spec,
        r#"{"family": {"kind": "circle", "chord": 0.99}, "n_values": [8, 12, 16, 24], "trials_per_n": 1}"#,
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = hklab(&[
        "sweep",
        path(&spec),
        "--out",
        path(&out_dir),
        "--no-spectral",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let sweep = fs::read_to_string(out_dir.join("sweep.csv")).unwrap();
    assert_eq!(sweep.lines().next().unwrap(), SWEEP_HEADER.join(","));
    assert_eq!(sweep.lines().count(), 5);
    let fit = hklab(&["fit", path(&out_dir.join("report.json"))]);
    assert!(
        fit.status.success(),
        "{}",
        String::from_utf8_lossy(&fit.stderr)
    );
    let fit: serde_json::Value = serde_json::from_slice(&fit.stdout).unwrap();
    assert!(fit["slope"].as_f64().unwrap() > 1.0);
}

#[test]
fn line_of_three_sweep_row() {
    let spec = ExperimentSpec::from_json(
        r#"{"family": {"kind": "line", "spacing": 1.0}, "n_values": [3]}"#,
    )
    .unwrap();
    let report = run_experiment(&spec).unwrap();
    assert_eq!(report.rows.len(), 1);
    assert_eq!(report.rows[0].freezing_time, Some(2));
    assert_eq!(report.rows[0].merge_count, 1);
    assert!(report.all_verified());
}

#[test]
fn sweeps_are_byte_identical_across_runs_and_pool_sizes() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    fs::write(
        &spec,
        r#"{"family": {"kind": "random", "d": 2, "box_side": 5.0}, "n_values": [5, 10, 20],
            "trials_per_n": 4, "seed": 11, "output": {"dir": "unused", "step_csv": true}}"#,
    )
    .unwrap();
    let run = |name: &str, workers: &str| {
        let out = dir.path().join(name);
        let run = Command::new(env!("CARGO_BIN_EXE_hklab"))
            .args(["sweep", path(&spec), "--out", path(&out)])
            .env("HK_WORKERS", workers)
            .output()
            .unwrap();
        assert!(run.status.success());
        out
    };
    let (a, b) = (run("a", "1"), run("b", "4"));
    let mut files: Vec<_> = fs::read_dir(&a)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    files.sort();
    assert!(files.len() > 12);
    for f in files
        .iter()
        .filter(|f| f.to_string_lossy().ends_with(".csv"))
    {
        assert_eq!(
            fs::read(a.join(f)).unwrap(),
            fs::read(b.join(f)).unwrap(),
            "{f:?}"
        );
    }
}

#[test]
fn bad_specs_are_rejected() {
    for bad in [
        r#"{"family": {"kind": "line", "spacing": 1.0}, "n_values": [4, 3]}"#,
        r#"{"family": {"kind": "line", "spacing": 1.0}, "n_values": [3], "trials_per_n": 0}"#,
        r#"{"family": {"kind": "line", "spacing": 1.0}, "n_values": []}"#,
        r#"{"family": {"kind": "hexagon"}, "n_values": [3]}"#,
    ] {
        assert!(ExperimentSpec::from_json(bad).is_err(), "{bad}");
    }
}
