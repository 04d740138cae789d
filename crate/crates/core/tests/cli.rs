use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use breatherlab::csf::csf_profile;
use breatherlab::io::SnapshotCsv;
use serde_json::Value;

const SMALL_BREATHER: &str = r#"
grid.x_min = -4.0
grid.x_max = 4.0
grid.n = 200
ic.kind = "breather"
ic.lambda = 7.38905609893065
solver.error_tol = 1e-3
bc.left.kind = "cusp"
bc.right.kind = "frozen"
run.times = [0.0, 0.02]
verify.kind = "breather"
verify.shift = 1.0
verify.t = 0.02
verify.window = [-1.0, 0.5]
"#;

const SMALL_CSF: &str = r#"
grid.x_min = -2.0
grid.x_max = 2.0
grid.n = 400
ic.kind = "csf"
solver.error_tol = 1e-4
verify.kind = "csf"
verify.t = 0.001
verify.window = [0.05, 0.5]
"#;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_breatherlab")).args(args).output().unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn manifest_without_clock(dir: &Path) -> Value {
    let mut v: Value = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    v.as_object_mut().unwrap().remove("wall_clock_seconds");
    v
}

fn stdout_json(o: &Output) -> Value {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn ricci_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "b.toml", SMALL_BREATHER);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for out in [&a, &b] {
        let o = bin(&["ricci-run", "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let mut files: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    files.sort();
    assert!(files.iter().any(|f| f == "u_000.csv") && files.iter().any(|f| f == "K_001.csv"), "{files:?}");
    for f in files.iter().filter(|f| f.to_string_lossy().ends_with(".csv")) {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f:?}");
    }
    assert_eq!(manifest_without_clock(&a), manifest_without_clock(&b));
    let m = manifest_without_clock(&a);
    assert!(m["reports"]["breather"]["residual_sup"].as_f64().unwrap() >= 0.0);
    assert_eq!(m["config"]["grid.n"], 200);
}

#[test]
fn manifest_echo_reproduces_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "b.toml", SMALL_BREATHER);
    let first = tmp.path().join("first");
    assert!(bin(&["ricci-run", "--config", &cfg, "--out", first.to_str().unwrap()]).status.success());
    let echo = first.join("manifest.json");
    let second = tmp.path().join("second");
    let o = bin(&["ricci-run", "--config", echo.to_str().unwrap(), "--out", second.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (m1, m2) = (manifest_without_clock(&first), manifest_without_clock(&second));
    assert_eq!(m1, m2);
}

#[test]
fn verify_recomputes_reports_from_files() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "b.toml", SMALL_BREATHER);
    let out = tmp.path().join("run");
    assert!(bin(&["ricci-run", "--config", &cfg, "--out", out.to_str().unwrap()]).status.success());
    let stored = manifest_without_clock(&out)["reports"]["breather"].clone();
    let v = stdout_json(&bin(&["verify", "--manifest", out.to_str().unwrap()]));
    assert_eq!(v["breather"], stored);

    let zero = stdout_json(&bin(&["verify", "--manifest", out.to_str().unwrap(), "--override", "verify.shift=0"]));
    assert_eq!(zero["breather"]["residual_sup"].as_f64().unwrap(), 0.0);

    let cusp = stdout_json(&bin(&["cusp-check", "--manifest", out.to_str().unwrap(), "--t", "0.02", "--window", "-1,0.5"]));
    assert!(cusp["cusp"]["max_abs_2tk_plus_1"].as_f64().unwrap().is_finite());
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let no_n = write_config(tmp.path(), "bad.toml", &SMALL_BREATHER.replace("grid.n = 200", ""));
    let o = bin(&["ricci-run", "--config", &no_n, "--out", tmp.path().join("x").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("grid.n"));

    let cfg = write_config(tmp.path(), "b.toml", SMALL_BREATHER);
    let o = bin(&["ricci-run", "--config", &cfg, "--override", "grid.n=abc"]);
    assert_eq!(o.status.code(), Some(2));
    let o = bin(&["ricci-run", "--config", &cfg, "--override", "grid.bogus=1"]);
    assert_eq!(o.status.code(), Some(2));

    let out = tmp.path().join("run");
    assert!(bin(&["ricci-run", "--config", &cfg, "--out", out.to_str().unwrap()]).status.success());
    // t = 0.02 / e has no snapshot
    let o = bin(&["soliton-defect", "--manifest", out.to_str().unwrap(), "--shift", "0.5", "--t", "0.02", "--window", "-1,0.5"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    let o = bin(&["cusp-check", "--manifest", out.to_str().unwrap(), "--t", "0.02", "--window", "-9,0"]);
    assert_eq!(o.status.code(), Some(3));

    let o = bin(&["verify", "--manifest", tmp.path().join("missing").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn csf_run_and_verify() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", SMALL_CSF);
    let out = tmp.path().join("csf");
    let o = bin(&["csf-run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m = manifest_without_clock(&out);
    let snaps = m["snapshots"].as_array().unwrap();
    let times: Vec<f64> = snaps.iter().map(|s| s["t"].as_f64().unwrap()).collect();
    let e2 = std::f64::consts::E.powi(2);
    assert!(times.contains(&0.001) && times.iter().any(|t| (t - e2 * 0.001).abs() < 1e-15), "{times:?}");
    let first = SnapshotCsv::read(&out.join(snaps[0]["file"].as_str().unwrap())).unwrap();
    assert_eq!(first.column, "F");
    let v = stdout_json(&bin(&["verify", "--manifest", out.to_str().unwrap()]));
    assert_eq!(v["csf"], m["reports"]["csf"]);
}

#[test]
fn figure1_export() {
    let tmp = tempfile::tempdir().unwrap();
    let o = bin(&["export-figure1", "--out", tmp.path().to_str().unwrap(), "--dx", "0.01"]);
    assert!(o.status.success());
    let s = SnapshotCsv::read(&tmp.path().join("figure1.csv")).unwrap();
    assert_eq!(s.x.len(), 1001);
    assert_eq!((s.x[500], s.values[500]), (0.0, 0.0));
    for (x, f) in s.x.iter().zip(&s.values) {
        assert_eq!(*f, csf_profile(*x));
    }
    let o = bin(&["export-figure1", "--out", tmp.path().to_str().unwrap(), "--dx", "0.3"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweep_runs_each_config() {
    let tmp = tempfile::tempdir().unwrap();
    let a = write_config(tmp.path(), "one.toml", SMALL_BREATHER);
    let b = write_config(tmp.path(), "two.toml", &SMALL_BREATHER.replace("grid.n = 200", "grid.n = 100"));
    let root = tmp.path().join("sweep");
    let o = bin(&["sweep", "--config", &a, "--config", &b, "--out", root.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(root.join("one/manifest.json").is_file() && root.join("two/manifest.json").is_file());
}
