//! End-to-end tests of the `cqad` binary: flag validation, exit codes,
//! output files, manifests, and replay.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
        .display()
        .to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cqad"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn spectroscopy_writes_expected_record_count() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "spectroscopy",
        "--config",
        &fixture("device_B.json"),
        "--cluster",
        "S3_1",
        "--fmin",
        "4.773",
        "--fmax",
        "4.785",
        "--points",
        "401",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let csv = std::fs::read_to_string(dir.path().join("spectroscopy.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 401 * 4);
    assert!(dir.path().join("spectroscopy.manifest.json").exists());
}

#[test]
fn spectroscopy_rejects_single_point_grid() {
    let out = run(&[
        "spectroscopy",
        "--config",
        &fixture("device_A.json"),
        "--cluster",
        "S2_1",
        "--fmin",
        "4.77",
        "--fmax",
        "4.78",
        "--points",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_of(&out).contains("error:"));
    assert!(stderr_of(&out).contains("at least 2"));
}

#[test]
fn missing_config_is_usage_error_with_schema_pointer() {
    let out = run(&[
        "spectroscopy",
        "--cluster",
        "S2_1",
        "--fmin",
        "4.77",
        "--fmax",
        "4.78",
        "--points",
        "11",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr_of(&out);
    assert!(err.contains("error:"), "{err}");
    assert!(err.contains("device-schema.json"), "{err}");
}

#[test]
fn unknown_cluster_lists_available_and_exits_2() {
    let out = run(&[
        "trace",
        "--config",
        &fixture("device_A.json"),
        "--cluster",
        "S7_7",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_of(&out);
    assert!(err.contains("S2_1") && err.contains("S2_2"), "{err}");
}

#[test]
fn rabi_grid_bytes_match_across_thread_counts() {
    let run_with = |threads: &str, dir: &Path| {
        let out = run(&[
            "rabi",
            "--config",
            &fixture("device_A.json"),
            "--cluster",
            "S2_1",
            "--fmin",
            "4.772",
            "--fmax",
            "4.780",
            "--fpoints",
            "17",
            "--tsteps",
            "51",
            "--threads",
            threads,
            "--out",
            dir.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", stderr_of(&out));
    };
    let d1 = tempfile::tempdir().unwrap();
    let d8 = tempfile::tempdir().unwrap();
    run_with("1", d1.path());
    run_with("8", d8.path());
    let csv1 = std::fs::read(d1.path().join("rabi.csv")).unwrap();
    let csv8 = std::fs::read(d8.path().join("rabi.csv")).unwrap();
    assert_eq!(csv1, csv8);
    let json1 = std::fs::read(d1.path().join("rabi.json")).unwrap();
    let json8 = std::fs::read(d8.path().join("rabi.json")).unwrap();
    assert_eq!(json1, json8);
}

#[test]
fn rabi_manifest_records_t1_flag() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "rabi",
        "--config",
        &fixture("device_A.json"),
        "--cluster",
        "S2_1",
        "--fmin",
        "4.772",
        "--fmax",
        "4.780",
        "--fpoints",
        "5",
        "--tsteps",
        "11",
        "--t1-us",
        "5.13",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let manifest: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("rabi.manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["parameters"]["t1_us"], "5.13");
    assert_eq!(manifest["parameters"]["tmax_us"], "1");
    assert!(manifest["config_digest"]
        .as_str()
        .unwrap()
        .starts_with("sha256:"));
}

#[test]
fn trace_normalized_column_masks_denominator_zeros() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "trace",
        "--config",
        &fixture("device_A.json"),
        "--cluster",
        "S2_1",
        "--tmax-us",
        "0.5",
        "--tsteps",
        "501",
        "--normalized",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let csv = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert!(csv.starts_with("time_us,p_excited,purity,normalized\n"));
    assert!(!csv.contains("inf") && !csv.to_lowercase().contains("nan"));
    assert!(
        csv.lines().any(|l| l.ends_with(',')),
        "expected masked rows"
    );
}

#[test]
fn dicke_synthetic_degenerate_fidelity_is_flat_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "dicke",
        "--n-modes",
        "3",
        "--coupling-mhz",
        "0.7",
        "--frequency-ghz",
        "4.75",
        "--spacing-mhz",
        "0",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("dicke.json")).unwrap())
            .unwrap();
    for v in report["curves"]["fidelity_exact"].as_array().unwrap() {
        assert!((v.as_f64().unwrap() - 1.0).abs() < 1e-12);
    }
    assert!(report["tau_timed"]["numeric_root_exact_us"].is_null());
    assert!(report["tau_timed"]["closed_form_mean_spacing_us"].is_null());
    // degenerate equal couplings make both minimum-purity conventions equal
    let a = report["tau_min_purity"]["from_g_eff_us"].as_f64().unwrap();
    let b = report["tau_min_purity"]["from_sqrt_n_g_bar_us"]
        .as_f64()
        .unwrap();
    assert!((a - b).abs() < 1e-15);
}

#[test]
fn dicke_requires_cluster_or_full_synthetic_set() {
    let out = run(&["dicke", "--n-modes", "3"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_of(&out).contains("--coupling-mhz"));
}

#[test]
fn readout_worked_example() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "readout",
        "--config",
        &fixture("device_A.json"),
        "--qubit",
        "QA",
        "--p0",
        "0.5",
        "--p1",
        "0.5",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    assert!(
        stdout_of(&out).contains("(0.43142, 0.56858)"),
        "{}",
        stdout_of(&out)
    );
}

#[test]
fn readout_column_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "readout",
        "--config",
        &fixture("device_A.json"),
        "--qubit",
        "QA",
        "--p0",
        "0.985",
        "--p1",
        "0.015",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("readout.csv")).unwrap();
    let data = csv.lines().nth(1).unwrap();
    let fields: Vec<f64> = data.split(',').map(|f| f.parse().unwrap()).collect();
    assert!((fields[4] - 1.0).abs() < 1e-9, "corrected p0 {}", fields[4]);
    assert!(fields[5].abs() < 1e-9, "corrected p1 {}", fields[5]);
}

#[test]
fn readout_accepts_shot_counts() {
    let dir = tempfile::tempdir().unwrap();
    // 5000/5000 shots is the (0.5, 0.5) worked example
    let out = run(&[
        "readout",
        "--config",
        &fixture("device_A.json"),
        "--qubit",
        "QA",
        "--n0",
        "5000",
        "--n1",
        "5000",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    assert!(
        stdout_of(&out).contains("(0.43142, 0.56858)"),
        "{}",
        stdout_of(&out)
    );
    // counts CSV batch
    let input = dir.path().join("counts.csv");
    std::fs::write(&input, "n0,n1\n5000,5000\n985,15\n").unwrap();
    let out = run(&[
        "readout",
        "--config",
        &fixture("device_A.json"),
        "--qubit",
        "QA",
        "--input",
        input.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let csv = std::fs::read_to_string(dir.path().join("readout.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    // zero total shots is rejected
    let out = run(&[
        "readout",
        "--config",
        &fixture("device_A.json"),
        "--qubit",
        "QA",
        "--n0",
        "0",
        "--n1",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn readout_rejects_non_probability_input() {
    let out = run(&[
        "readout",
        "--config",
        &fixture("device_A.json"),
        "--qubit",
        "QA",
        "--p0",
        "0.6",
        "--p1",
        "0.6",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("sum to 1"));
}

#[test]
fn readout_batch_csv_input() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("measured.csv");
    std::fs::write(&input, "p0,p1\n0.5,0.5\n0.05,0.95\n0.985,0.015\n").unwrap();
    let out = run(&[
        "readout",
        "--config",
        &fixture("device_A.json"),
        "--qubit",
        "QA",
        "--input",
        input.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let csv = std::fs::read_to_string(dir.path().join("readout.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    // second record clamps to the (0, 1) vertex while the raw inverse is negative
    let row: Vec<f64> = csv
        .lines()
        .nth(2)
        .unwrap()
        .split(',')
        .map(|f| f.parse().unwrap())
        .collect();
    assert!(row[2] < 0.0, "unconstrained p0 {}", row[2]);
    assert_eq!(row[4], 0.0);
    assert_eq!(row[5], 1.0);
}

#[test]
fn replay_reproduces_bytes() {
    let first = tempfile::tempdir().unwrap();
    let out = run(&[
        "rabi",
        "--config",
        &fixture("device_B.json"),
        "--cluster",
        "S3_1",
        "--fmin",
        "4.776",
        "--fmax",
        "4.782",
        "--fpoints",
        "9",
        "--tsteps",
        "21",
        "--out",
        first.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let second = tempfile::tempdir().unwrap();
    let out = run(&[
        "replay",
        "--manifest",
        first.path().join("rabi.manifest.json").to_str().unwrap(),
        "--out",
        second.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    for name in ["rabi.csv", "rabi.json", "rabi.manifest.json"] {
        let a = std::fs::read(first.path().join(name)).unwrap();
        let b = std::fs::read(second.path().join(name)).unwrap();
        assert_eq!(a, b, "{name} differs under replay");
    }
}

#[test]
fn replay_reproduces_every_command() {
    let config = fixture("device_A.json");
    let runs: Vec<(&str, Vec<String>)> = vec![
        (
            "spectroscopy",
            vec![
                "spectroscopy".into(),
                "--config".into(),
                config.clone(),
                "--cluster".into(),
                "S2_1".into(),
                "--fmin".into(),
                "4.772".into(),
                "--fmax".into(),
                "4.780".into(),
                "--points".into(),
                "21".into(),
            ],
        ),
        (
            "trace",
            vec![
                "trace".into(),
                "--config".into(),
                config.clone(),
                "--cluster".into(),
                "S2_1".into(),
                "--tsteps".into(),
                "31".into(),
                "--normalized".into(),
            ],
        ),
        (
            "dicke",
            vec![
                "dicke".into(),
                "--n-modes".into(),
                "2".into(),
                "--coupling-mhz".into(),
                "0.8".into(),
                "--frequency-ghz".into(),
                "4.75".into(),
                "--spacing-mhz".into(),
                "1.5".into(),
            ],
        ),
        (
            "readout",
            vec![
                "readout".into(),
                "--config".into(),
                config.clone(),
                "--qubit".into(),
                "QA".into(),
                "--n0".into(),
                "800".into(),
                "--n1".into(),
                "200".into(),
            ],
        ),
    ];
    for (name, args) in runs {
        let first = tempfile::tempdir().unwrap();
        let mut argv: Vec<&str> = args.iter().map(String::as_str).collect();
        argv.push("--out");
        argv.push(first.path().to_str().unwrap());
        let out = run(&argv);
        assert!(out.status.success(), "{name}: {}", stderr_of(&out));
        let second = tempfile::tempdir().unwrap();
        let manifest = first.path().join(format!("{name}.manifest.json"));
        let out = run(&[
            "replay",
            "--manifest",
            manifest.to_str().unwrap(),
            "--out",
            second.path().to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{name} replay: {}", stderr_of(&out));
        for entry in std::fs::read_dir(first.path()).unwrap() {
            let file = entry.unwrap().file_name();
            let a = std::fs::read(first.path().join(&file)).unwrap();
            let b = std::fs::read(second.path().join(&file)).unwrap();
            assert_eq!(a, b, "{name}: {file:?} differs under replay");
        }
    }
}

#[test]
fn replay_detects_config_drift() {
    let dir = tempfile::tempdir().unwrap();
    // run against a copy of the fixture, then tamper with the copy
    let config = dir.path().join("device.json");
    std::fs::copy(fixture("device_A.json"), &config).unwrap();
    let out = run(&[
        "trace",
        "--config",
        config.to_str().unwrap(),
        "--cluster",
        "S2_1",
        "--tsteps",
        "11",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let mut text = std::fs::read_to_string(&config).unwrap();
    text = text.replace("0.68", "0.69");
    std::fs::write(&config, text).unwrap();
    let out = run(&[
        "replay",
        "--manifest",
        dir.path().join("trace.manifest.json").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("digest"));
}

#[test]
fn device_warnings_go_to_stderr() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("tight.json");
    let text = std::fs::read_to_string(fixture("device_A.json"))
        .unwrap()
        .replace("\"fsr_mhz\": 30.1", "\"fsr_mhz\": 4.0");
    std::fs::write(&config, text).unwrap();
    let out = run(&[
        "dicke",
        "--config",
        config.to_str().unwrap(),
        "--cluster",
        "S2_1",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(stderr_of(&out).contains("warning:"), "{}", stderr_of(&out));
}
