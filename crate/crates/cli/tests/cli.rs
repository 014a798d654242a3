use std::path::PathBuf;
use std::process::{Command, Output};

use hybrid_cnot::config::DeviceFile;

fn hcnot(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hcnot"))
        .args(args)
        .env_remove("HCNOT_WORKERS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("hcnot-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn bundled_preset_is_table1() {
    let text = include_str!("../../../configs/table1.toml");
    assert_eq!(DeviceFile::from_toml(text).unwrap(), DeviceFile::table1());
}

#[test]
fn diagnose_table1() {
    let o = hcnot(&["diagnose"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s = stdout(&o);
    assert!(s.contains("t_gate: 0.7407 us"), "{s}");
    assert!(s.contains("9.161e5"), "{s}");
    assert!(s.contains("5.5114 MHz") && s.contains("6.3640 MHz"), "{s}");
}

#[test]
fn equal_detunings_warn() {
    let dir = scratch("equal");
    let mut f = DeviceFile::table1();
    f.omega_c_ghz = vec![3.24, 3.24, 3.24];
    let path = dir.join("equal.toml");
    std::fs::write(&path, f.to_toml()).unwrap();
    let o = hcnot(&["--config", path.to_str().unwrap(), "diagnose"]);
    assert_eq!(o.status.code(), Some(2), "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("WARNING"));
}

#[test]
fn malformed_config_is_a_usage_error() {
    let dir = scratch("bad");
    let path = dir.join("bad.toml");
    std::fs::write(&path, "alpha = 1.25\nomega_eg_ghz = \"four\"\n").unwrap();
    let o = hcnot(&["--config", path.to_str().unwrap(), "diagnose"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));

    std::fs::write(&path, DeviceFile::table1().to_toml() + "extra_key = 3\n").unwrap();
    let o = hcnot(&["--config", path.to_str().unwrap(), "diagnose"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("extra_key"));

    let o = hcnot(&["--config", "/nonexistent/x.toml", "diagnose"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn dump_config_round_trips() {
    let o = hcnot(&["--dump-config"]);
    assert_eq!(o.status.code(), Some(0));
    let back = DeviceFile::from_toml(&stdout(&o)).unwrap();
    assert_eq!(
        back.to_params().unwrap(),
        DeviceFile::table1().to_params().unwrap()
    );
}

#[test]
fn usage_errors() {
    assert_eq!(hcnot(&[]).status.code(), Some(1));
    assert_eq!(hcnot(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(hcnot(&["sweep", "--var", "kappa"]).status.code(), Some(1));
    let o = hcnot(&["sweep", "--var", "delta", "--grid"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("empty"), "{}", stderr(&o));
    let o = Command::new(env!("CARGO_BIN_EXE_hcnot"))
        .args(["diagnose"])
        .env("HCNOT_WORKERS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn verify_gate_fails_loudly_when_truncated() {
    let o = hcnot(&["verify-gate", "--cutoff", "3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("0/16 words pass"), "{}", stdout(&o));
}

#[test]
fn small_sweep_writes_csv_and_manifest() {
    let dir = scratch("sweep");
    let o = hcnot(&[
        "sweep",
        "--var",
        "c",
        "--grid",
        "-0.05,0,0.05",
        "--kappa-inv",
        "100",
        "--cutoff",
        "3",
        "--n-traj",
        "20",
        "--out",
        dir.to_str().unwrap(),
    ]);
    let code = o.status.code().unwrap();
    assert!(code == 0 || code == 2, "{}", stderr(&o));
    let s = stdout(&o);
    assert!(s.contains("quoted 0.9348"), "{s}");
    assert!(s.contains("residual rotation"), "{s}");
    let csv = std::fs::read_to_string(dir.join("sweep_c.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(dir.join("sweep_c.manifest.toml").exists());
    assert!(!dir.join("sweep_c.partial.csv").exists());
}

#[test]
fn ghz_point() {
    let o = hcnot(&["ghz", "--cutoff", "3", "--n-traj", "20", "--delta", "-0.1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("phase-compensated F"));
}
