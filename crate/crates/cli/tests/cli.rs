use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gfonls")).args(args).output().unwrap()
}

fn fig(name: &str) -> String {
    let p: PathBuf = Path::new(env!("CARGO_MANIFEST_DIR")).join(format!("../../figures/{name}.json"));
    p.to_string_lossy().into_owned()
}

fn small_config(dir: &Path, body_patch: &str) -> String {
    let text = format!(
        r#"{{
  "model": {{"alpha": [1, 0.01, 0.01, 0.01], "psi_minus": [1, 0]}},
  "spectrum": {{"pole_order": "simple", "entries": [{{"z": [0, {body_patch}], "A": [1, 0]}}]}},
  "grid": {{"x": [-3, 3, 61], "t": [-0.5, 0.5, 11]}},
  "modes": {{"sign": "minus_i", "dispersion": "hierarchy", "gauge": "gauge_fixed", "k4": "integrable"}},
  "outputs": [
    {{"kind": "csv", "path": "out/f.csv"}},
    {{"kind": "pgm", "path": "out/f.pgm"}},
    {{"kind": "json-meta", "path": "out/f.meta.json"}}
  ]
}}"#
    );
    let path = dir.join("cfg.json");
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn theta_of_fig2a() {
    let o = bin(&["theta", "-c", &fig("fig2a")]);
    assert!(o.status.success());
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), "2π");
    let o = bin(&["theta", "-c", &fig("fig3a")]);
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), "π");
}

#[test]
fn invalid_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "0.5");
    let o = bin(&["simulate", "-c", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("spectrum.entries"));
}

#[test]
fn missing_file_exits_4() {
    let o = bin(&["theta", "-c", "/nonexistent/cfg.json"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn simulate_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "1.5");
    let out = dir.path().to_string_lossy().into_owned();
    let o = bin(&["simulate", "-c", &cfg, "--out-dir", &out, "--workers", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let meta: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(meta["flagged_points"], 0);
    let csv = std::fs::read_to_string(dir.path().join("out/f.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 61 * 11);
    let pgm = std::fs::read(dir.path().join("out/f.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n"));
    let stored: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/f.meta.json")).unwrap()).unwrap();
    assert_eq!(stored, meta);

    let field = dir.path().join("out/f.csv").to_string_lossy().into_owned();
    let o = bin(&["verify", "-c", &cfg, "--field", &field]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let regenerated = bin(&["verify", "-c", &cfg]);
    assert_eq!(o.stdout, regenerated.stdout);
}

#[test]
fn verify_refine_reports_order() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "1.5");
    let o = bin(&["verify", "-c", &cfg, "--refine", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    for key in ["coarse", "fine", "reduction_factor", "convergence_order"] {
        assert!(!v[key].is_null(), "{key}");
    }
    assert_eq!(bin(&["verify", "-c", &cfg, "--refine", "1"]).status.code(), Some(2));
}

#[test]
fn trace_real_axis_is_unimodular() {
    let o = bin(&["trace", "-c", &fig("fig2a"), "--contour", "real", "--samples", "40"]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("z_re,z_im,s11_re,s11_im,s22_re,s22_im,abs_s11"));
    let mut n = 0;
    for l in lines {
        let abs: f64 = l.rsplit(',').next().unwrap().parse().unwrap();
        assert!((abs - 1.0).abs() < 1e-12);
        n += 1;
    }
    assert!(n > 30);
}

#[test]
fn calibrate_prints_verdict() {
    let o = bin(&["calibrate", "-c", &fig("fig2a"), "--samples", "10", "--seed", "1"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["verdict"].is_string());
    assert_eq!(v["reports"].as_array().unwrap().len(), 10);
}
