use std::fs;
use std::path::Path;

use benjamin_lab::cli::{emit_plot, read_summary, run, PlotKind, SCHEMA_VERSION};
use benjamin_lab::snapshot::Snapshot;

fn blab(args: &[&str], out: &Path) -> i32 {
    let mut argv = vec!["blab"];
    argv.extend_from_slice(args);
    let out = out.to_str().unwrap();
    argv.extend(["--out", out, "--quiet"]);
    run(argv)
}

#[test]
fn resonance_reports_tiny_errors() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(blab(&["resonance", "--alpha", "1", "--beta", "1", "--samples", "100000"], d.path()), 0);
    let csv = fs::read_to_string(d.path().join("resonance.csv")).unwrap();
    assert!(csv.starts_with("set,alpha,beta,gamma,h_max_err,q_max_err,theta_max_err\n"));
    let s = read_summary(&d.path().join("resonance.json")).unwrap();
    assert_eq!(s.schema_version, SCHEMA_VERSION);
    assert_eq!(s.subcommand, "resonance");
    assert_eq!(s.config["samples"], 100000);
    assert!(s.results["h_max_err"].as_f64().unwrap() < 1e-10);
    assert!(s.results["resonance_floor"]["min_ratio"].as_f64().unwrap() >= 0.5);
}

#[test]
fn exit_codes() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(blab(&["resonance", "--beta", "0"], d.path()), 2);
    assert_eq!(blab(&["resonance", "--no-such-flag"], d.path()), 2);
    assert_eq!(run(["blab", "frobnicate"]), 2);
    assert_eq!(run(["blab"]), 2);
    assert_eq!(run(["blab", "--help"]), 0);
    assert_eq!(blab(&["bilinear-sweep", "--n-list", "64,x"], d.path()), 2);
    assert_eq!(blab(&["solve", "--ic", "file"], d.path()), 2);
    // an amplitude far beyond the resolved regime blows up
    let blow = ["solve", "--ic", "gaussian", "--amplitude", "50", "--box", "10", "--n", "64", "--dt", "0.01", "--tfinal", "5"];
    assert_eq!(blab(&blow, d.path()), 3);
    assert!(!d.path().join("solve.json").exists());
}

#[test]
fn solve_soliton_writes_series() {
    let d = tempfile::tempdir().unwrap();
    let args = ["solve", "--alpha", "0", "--beta", "1", "--gamma", "0", "--ic", "soliton", "--stride", "250", "--plot"];
    assert_eq!(blab(&args, d.path()), 0);
    let csv = fs::read_to_string(d.path().join("conservation.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "t,mass,l2,mass_drift,l2_drift");
    assert_eq!(csv.lines().count(), 6);
    let last = Snapshot::from_bytes(&fs::read(d.path().join("snapshots/u_00004.blab")).unwrap()).unwrap();
    assert_eq!(last.grid().n(), 512);
    let sidecar: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.path().join("snapshots/series.json")).unwrap()).unwrap();
    assert_eq!(sidecar["conservation"].as_array().unwrap().len(), 5);
    assert!(d.path().join("conservation.svg").exists());
    let s = read_summary(&d.path().join("solve.json")).unwrap();
    assert!(s.results["l2_drift"].as_f64().unwrap() < 1e-8);

    // restart from the last snapshot
    let e = tempfile::tempdir().unwrap();
    let snap = d.path().join("snapshots/u_00004.blab");
    let args = ["solve", "--alpha", "0", "--ic", "file", "--ic-file", snap.to_str().unwrap(), "--tfinal", "0.1"];
    assert_eq!(blab(&args, e.path()), 0);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("sweep.cfg");
    fs::write(&cfg, "# first family\ns = -1\nb = 0.3\nn_list = 64,128,256\nplot = true\n").unwrap();
    let out = d.path().join("out");
    assert_eq!(blab(&["bilinear-sweep", "--config", cfg.to_str().unwrap(), "--b", "0.5"], &out), 0);
    let s = read_summary(&out.join("bilinear-sweep.json")).unwrap();
    assert_eq!(s.config["b"], 0.5);
    assert_eq!(s.config["n_list"].as_array().unwrap().len(), 3);
    assert!(s.results["slope"].as_f64().unwrap() > 0.2);
    let csv = fs::read_to_string(out.join("bilinear-sweep.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "N,ratio");
    assert!(fs::read_to_string(out.join("bilinear-sweep.svg")).unwrap().contains("slope"));

    fs::write(&cfg, "nonsense line\n").unwrap();
    assert_eq!(blab(&["blocks", "--config", cfg.to_str().unwrap()], &out), 2);
    fs::write(&cfg, "unknown_key = 1\n").unwrap();
    assert_eq!(blab(&["blocks", "--config", cfg.to_str().unwrap()], &out), 2);
}

#[test]
fn blocks_columns_and_determinism() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["blocks", "--count", "4", "--resolution", "16", "--seed", "21"];
    assert_eq!(blab(&args, a.path()), 0);
    assert_eq!(blab(&args, b.path()), 0);
    let x = fs::read(a.path().join("blocks.csv")).unwrap();
    assert_eq!(x, fs::read(b.path().join("blocks.csv")).unwrap());
    let text = String::from_utf8(x).unwrap();
    assert_eq!(text.lines().next().unwrap(), "N1,N2,N3,H,L1,L2,L3,case,bound,numeric_lower,ratio");
    assert_eq!(text.lines().count(), 5);
}

#[test]
fn counterexample_families() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(blab(&["counterexample", "--n", "128", "--plot"], d.path()), 0);
    let csv = fs::read_to_string(d.path().join("counterexample.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(d.path().join("counterexample.svg").exists());
    assert_eq!(blab(&["counterexample", "--family", "second", "--m-list", "400,25,100"], d.path()), 0);
    let csv = fs::read_to_string(d.path().join("counterexample.csv")).unwrap();
    let ms: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(ms, ["25", "100", "400"]);
    assert_eq!(read_summary(&d.path().join("counterexample.json")).unwrap().results["strictly_increasing"], true);
    assert_eq!(blab(&["counterexample", "--family", "second", "--m-list", "2.5"], d.path()), 2);
}

#[test]
fn picard_growth_and_norms() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(blab(&["picard-growth", "--s", "-0.5", "--n-list", "256,512,1024,2048"], d.path()), 0);
    let csv = fs::read_to_string(d.path().join("picard-growth.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "N,a3_norm,a3_norm_times_logN");
    let s = read_summary(&d.path().join("picard-growth.json")).unwrap();
    assert!((s.results["slope"].as_f64().unwrap() + 0.5).abs() < 0.15);
    assert!(emit_plot(&d.path().join("picard-growth.csv"), PlotKind::LogLog).is_ok());
    assert_eq!(blab(&["picard-growth", "--n-list", "256,512"], d.path()), 2);

    assert_eq!(blab(&["norms", "--s", "0"], d.path()), 0);
    let s = read_summary(&d.path().join("norms.json")).unwrap();
    assert!(s.results["hs_norm"].as_f64().unwrap() > 0.0);
    assert_eq!(blab(&["norms", "--delta", "0"], d.path()), 2);
}
