use std::fs;
use std::process::Command;

fn acns() -> Command {
    Command::new(env!("CARGO_BIN_EXE_acns"))
}

#[test]
fn preset_prints_a_loadable_config() {
    let out = acns().args(["preset", "spinodal"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("scheme.kind"));
    assert!(acns().args(["preset", "nope"]).output().unwrap().status.code() != Some(0));
}

#[test]
fn run_writes_outputs_with_overrides() {
    let tmp = tempfile::tempdir().unwrap();
    let text = String::from_utf8(acns().args(["preset", "spinodal"]).output().unwrap().stdout)
        .unwrap()
        .replace("grid.nx = 80", "grid.nx = 12")
        .replace("grid.ny = 80", "grid.ny = 12")
        .replace("time.dt = 0.01", "time.dt = 0.05")
        .replace("time.t_end = 5.0", "time.t_end = 0.2");
    let cfg = tmp.path().join("run.toml");
    fs::write(&cfg, text).unwrap();
    let dir = tmp.path().join("out");
    let out = acns()
        .args(["run", "--config"])
        .arg(&cfg)
        .args(["--scheme", "acsav-ect", "--seed", "3", "--out"])
        .arg(&dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8(out.stdout)
        .unwrap()
        .starts_with("4 steps of acsav-ect"));
    let energy = fs::read_to_string(dir.join("energy.csv")).unwrap();
    // header plus the initial state and four steps
    assert_eq!(energy.lines().count(), 6);
    assert!(dir.join("manifest.json").exists());
}

#[test]
fn missing_config_is_an_error() {
    let out = acns()
        .args(["run", "--config", "/nonexistent/x.toml"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("loading"));
}
