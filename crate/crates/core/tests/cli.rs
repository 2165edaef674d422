//! End-to-end checks of the command-line tool.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_slepian-qns"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn configs() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/configs"))
}

#[test]
fn dpss_csv_has_one_column_per_order() {
    let o = run(&["dpss", "--n", "64", "--w", "0.05", "--orders", "3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "index,k0,k1,k2");
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').skip(1).map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 64);
    for k in 0..3 {
        let norm: f64 = rows.iter().map(|r| r[k] * r[k]).sum();
        assert!((norm - 1.0).abs() < 1e-10);
    }
}

#[test]
fn filter_reports_passband_on_stderr() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("f.csv");
    let wf = dir.path().join("w.json");
    let o = run(&[
        "filter", "--n", "200", "--w", "0.01", "--dt", "5e-6", "--shift-hz", "6000", "--points", "101", "--out",
        out.to_str().unwrap(), "--waveform-out", wf.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("frequency_hz,omega_rad_per_s,filter_rad2,in_passband"));
    assert_eq!(csv.lines().count(), 102);
    assert!(csv.lines().any(|l| l.ends_with(",1")));
    assert!(wf.exists());
}

#[test]
fn simulate_is_deterministic_in_the_seed() {
    let dir = tempfile::tempdir().unwrap();
    let wf = dir.path().join("w.json");
    assert!(run(&["filter", "--n", "200", "--w", "0.01", "--dt", "5e-6", "--shift-hz", "6000", "--out",
        dir.path().join("f.csv").to_str().unwrap(), "--waveform-out", wf.to_str().unwrap()])
    .status
    .success());
    let psd = dir.path().join("psd.json");
    std::fs::write(&psd, r#"{"kind":"lorentzian","amplitude":4e-4,"center":37699.0,"width":6974.0}"#).unwrap();
    let sim = |seed: &str, name: &str| {
        let out = dir.path().join(name);
        let o = run(&["simulate", "--waveform", wf.to_str().unwrap(), "--psd", psd.to_str().unwrap(), "--shots", "500",
            "--seed", seed, "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read(out).unwrap()
    };
    let a = sim("5", "a.json");
    assert_eq!(a, sim("5", "b.json"));
    assert_ne!(a, sim("6", "c.json"));
}

#[test]
fn estimate_from_simulation_records() {
    let dir = tempfile::tempdir().unwrap();
    let psd = dir.path().join("psd.json");
    std::fs::write(&psd, r#"{"kind":"lorentzian","amplitude":4e-4,"center":0.0,"width":6974.0}"#).unwrap();
    let mut records = Vec::new();
    for (i, hz) in ["2000", "6000", "10000"].iter().enumerate() {
        let wf = dir.path().join(format!("w{i}.json"));
        assert!(run(&["filter", "--n", "200", "--w", "0.01", "--dt", "5e-6", "--shift-hz", hz, "--out",
            dir.path().join("f.csv").to_str().unwrap(), "--waveform-out", wf.to_str().unwrap()])
        .status
        .success());
        let rec = dir.path().join(format!("r{i}.json"));
        let o = run(&["simulate", "--waveform", wf.to_str().unwrap(), "--psd", psd.to_str().unwrap(), "--shots", "500",
            "--seed", "1", "--shift-hz", hz, "--w", "0.01", "--out", rec.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        records.push(rec.to_str().unwrap().to_string());
    }
    let mut args = vec!["estimate", "--inputs"];
    args.extend(records.iter().map(|s| s.as_str()));
    let o = run(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("omega_rad_per_s,frequency_hz,estimate,std_dev,tag,z"));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn scenario_oracle_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["scenario", "--config", configs().join("empty_noise.json").to_str().unwrap(), "--out",
        dir.path().to_str().unwrap(), "--oracle-only"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("manifest.json").exists());
}

#[test]
fn print_config_emits_defaults() {
    let o = run(&["scenario", "--name", "detect-line", "--print-config"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["scenario"], "detect-line");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"schema_version":1,"scenario":"custom","psd":{"kind":"zero"},"bogus":1}"#).unwrap();
    let o = run(&["scenario", "--config", bad.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bogus"));
    // W outside (0, 1/2).
    assert_eq!(run(&["dpss", "--n", "64", "--w", "0.7", "--orders", "2"]).status.code(), Some(2));
    assert_eq!(run(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(run(&["scenario", "--name", "detect_line"]).status.code(), Some(2));
}
