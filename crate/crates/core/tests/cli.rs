use std::fs;
use std::process::{Command, Output};

use tempocomp::io::{write_pgm, RunConfig};
use tempocomp::ImageTensor;

fn tempocomp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tempocomp"))
        .args(args)
        .output()
        .unwrap()
}

#[test]
fn exit_codes() {
    assert_eq!(tempocomp(&["--help"]).status.code(), Some(0));
    assert_eq!(tempocomp(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(
        tempocomp(&["bench", "--noise", "sometimes"]).status.code(),
        Some(1)
    );
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let missing = tempocomp(&["edge-detect", "--image", "/nonexistent/x.pgm", "--out", out]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("/nonexistent/x.pgm"));
}

#[test]
fn bench_reports_throughput() {
    let single = tempocomp(&["bench"]);
    assert!(single.status.success());
    assert!(String::from_utf8_lossy(&single.stdout).contains("100 GOPS"));
    let wide = tempocomp(&["bench", "--wavelengths", "100"]);
    assert!(String::from_utf8_lossy(&wide.stdout).contains("10 TOPS"));
}

#[test]
fn config_rejects_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, r#"{"seed": 1, "noize": false}"#).unwrap();
    let res = tempocomp(&["--config", cfg.to_str().unwrap(), "calibrate"]);
    assert_eq!(res.status.code(), Some(2));

    fs::write(&cfg, RunConfig::default().to_json()).unwrap();
    let out = dir.path().join("out");
    let res = tempocomp(&[
        "--config",
        cfg.to_str().unwrap(),
        "calibrate",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(res.status.success());
    assert!(out.join("calibration.json").exists());
}

#[test]
fn flat_image_has_no_interior_edges() {
    let dir = tempfile::tempdir().unwrap();
    let img = dir.path().join("flat.pgm");
    write_pgm(&ImageTensor::new(8, 8, vec![0.5; 64]).unwrap(), &img).unwrap();
    let out = dir.path().join("out");
    let res = tempocomp(&[
        "--noise",
        "off",
        "edge-detect",
        "--image",
        img.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let pgm = fs::read(out.join("edges_photonic.pgm")).unwrap();
    let pixels = &pgm[pgm.len() - 64..];
    let first = pixels[9];
    for y in 1..7 {
        for x in 1..7 {
            assert_eq!(pixels[y * 8 + x], first);
        }
    }
}

#[test]
fn plan_prints_valid_json() {
    let res = tempocomp(&[
        "plan",
        "--m",
        "4",
        "--n",
        "16",
        "--l",
        "3",
        "--wavelengths",
        "2",
        "--spatial",
        "3",
    ]);
    assert!(res.status.success());
    let stdout = String::from_utf8_lossy(&res.stdout);
    let start = stdout.find('{').unwrap();
    let v: serde_json::Value = serde_json::from_str(&stdout[start..]).unwrap();
    assert_eq!(v["n_wavelengths"], 2);
    assert_eq!(v["assignments"].as_array().unwrap().len(), 12);
}
