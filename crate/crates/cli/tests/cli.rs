use std::fs;
use std::process::{Command, Output};

use tempfile::tempdir;

fn dcchain(args: &[&str], out: &std::path::Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dcchain"))
        .args(args)
        .env("DCCHAIN_OUT", out)
        .output()
        .expect("spawn dcchain")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn modes_writes_the_table() {
    let d = tempdir().unwrap();
    let o = dcchain(&["modes"], d.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(d.path().join("modes.csv")).unwrap();
    assert_eq!(text.lines().count(), 22);
    assert!(stdout(&o).contains("modes.csv"));
}

#[test]
fn poa_reports_the_peak() {
    let d = tempdir().unwrap();
    let o = dcchain(&["poa", "-o", "p_load=0.5"], d.path());
    assert!(o.status.success());
    let s = stdout(&o);
    let line = s.lines().find(|l| l.starts_with("poa peak p_pcc")).unwrap();
    assert!(line.contains(" Hz"), "{line}");
    assert!(d.path().join("poa_peaks.csv").exists());
}

#[test]
fn explicit_out_flag_wins_over_env() {
    let (d, e) = (tempdir().unwrap(), tempdir().unwrap());
    let target = d.path().join("here");
    let o = dcchain(&["equilibrium", "--load", "0.6", "--out", target.to_str().unwrap()], e.path());
    assert!(o.status.success());
    assert!(target.join("operating_point.txt").exists());
    assert!(!e.path().join("operating_point.txt").exists());
    let m = fs::read_to_string(target.join("run_manifest.toml")).unwrap();
    assert!(m.contains("p_load = 0.6"), "{m}");
}

#[test]
fn tune_prints_gains() {
    let d = tempdir().unwrap();
    let o = dcchain(&["tune", "--plant", "pll", "--f-bw", "10"], d.path());
    assert!(o.status.success());
    let s = stdout(&o);
    let mut lines = s.lines();
    assert!(lines.next().unwrap().starts_with("kp = "));
    assert!(lines.next().unwrap().starts_with("ki = "));
    let o = dcchain(&["tune", "--plant", "voltage", "--f-bw", "80"], d.path());
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("--c"));
}

#[test]
fn bad_override_fails_cleanly() {
    let d = tempdir().unwrap();
    let o = dcchain(&["equilibrium", "-o", "dcchain.vsi.nope=1"], d.path());
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.starts_with("error: ") && err.contains("dcchain.vsi.nope"), "{err}");
    let o = dcchain(&["equilibrium", "-o", "p_load=\"x\""], d.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn unknown_figure_is_an_error() {
    let d = tempdir().unwrap();
    let o = dcchain(&["fig_repro", "fig8"], d.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown figure"));
}

#[test]
fn fig6_via_env_directory() {
    let d = tempdir().unwrap();
    let o = dcchain(&["fig_repro", "fig6"], d.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["fig6a_poa.csv", "fig6a_peaks.csv", "fig6b_trace.csv"] {
        assert!(d.path().join(f).exists(), "{f}");
    }
}

#[test]
fn config_file_with_topology_flag() {
    let d = tempdir().unwrap();
    let cfg = d.path().join("s.toml");
    fs::write(&cfg, "[options.poa]\npoints = 50\n").unwrap();
    let o = dcchain(&["poa", "--config", cfg.to_str().unwrap(), "--topology", "ninebus"], d.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = stdout(&o);
    for ch in ["p_sm", "p_gfm", "p_gfl", "p_dc"] {
        assert!(s.contains(&format!("poa peak {ch}")), "{s}");
    }
    let curve = fs::read_to_string(d.path().join("poa.csv")).unwrap();
    assert_eq!(curve.lines().count(), 51);
}

#[test]
fn missing_config_file() {
    let d = tempdir().unwrap();
    let o = dcchain(&["modes", "--config", "/nonexistent/s.toml"], d.path());
    assert_eq!(o.status.code(), Some(1));
}
