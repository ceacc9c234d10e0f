//! End-to-end checks of the binary: exit codes, diagnostics and
//! reproducibility of the report files.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn magpek() -> Command {
    Command::new(env!("CARGO_BIN_EXE_magpek"))
}

fn tmp_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("magpek-cli-{}-{}", name, std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_cfg(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

const MINIMIZE_CFG: &str = "experiment = minimize\nseed = 4\ngrid.n = 12\ngrid.h = 0.75\n\
                            a.kind = symmetric\na.b = 1.0\nsolver.residual_tol = 1e-2\n\
                            solver.max_iter = 500\ndump-field = true\n";

#[test]
fn minimize_run_is_reproducible_bit_for_bit() {
    let dir = tmp_dir("repro");
    let cfg = write_cfg(&dir, "m.cfg", MINIMIZE_CFG);
    for out in ["a", "b"] {
        let o = run(magpek().args([
            "run",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            dir.join(out).to_str().unwrap(),
        ]));
        assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    }
    let a = std::fs::read(dir.join("a/report.json")).unwrap();
    let b = std::fs::read(dir.join("b/report.json")).unwrap();
    assert_eq!(a, b, "same (config, seed) must give identical reports");
    let fa = std::fs::read(dir.join("a/phi.mpk")).unwrap();
    let fb = std::fs::read(dir.join("b/phi.mpk")).unwrap();
    assert_eq!(fa, fb);
    // a different seed changes the run stamp
    let o = run(magpek().args([
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.join("c").to_str().unwrap(),
        "--seed",
        "99",
    ]));
    assert!(o.status.success());
    let c = std::fs::read_to_string(dir.join("c/report.json")).unwrap();
    assert!(c.contains("\"seed\": 99"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn dump_field_prints_header_and_slice() {
    let dir = tmp_dir("dump");
    let cfg = write_cfg(&dir, "m.cfg", MINIMIZE_CFG);
    let o = run(magpek().args([
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]));
    assert!(o.status.success());
    let o = run(magpek().args(["dump-field", dir.join("phi.mpk").to_str().unwrap(), "--axis", "2"]));
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("# n = [12, 12, 12], h = 0.75"), "{}", text);
    assert_eq!(text.lines().count(), 2 + 12, "header + csv header + one row per node");
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn malformed_config_exits_one_with_diagnostic() {
    let dir = tmp_dir("bad");
    let cfg = write_cfg(&dir, "bad.cfg", "grid.n = 12\na.kind = unknown\n");
    let o = run(magpek().args(["run", "--config", cfg.to_str().unwrap()]));
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("a.kind"), "diagnostic must name the key: {}", err);
    assert!(err.contains("line 2"), "diagnostic must carry the line: {}", err);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn invariant_suite_passes_and_fault_injection_exits_two() {
    let dir = tmp_dir("inv");
    let cfg = write_cfg(&dir, "inv.cfg", "experiment = invariants\nseed = 2\n");
    let o = run(magpek()
        .args(["check-invariants", "--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()]));
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    let table = String::from_utf8_lossy(&o.stdout);
    assert!(table.contains("hartree-positivity") && !table.contains("FAIL"), "{}", table);

    let o = run(magpek()
        .args(["check-invariants", "--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()])
        .env("MAGPEK_CORRUPT_KERNEL", "1"));
    assert_eq!(o.status.code(), Some(2), "corrupted kernel must exit 2");
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn oracle_subcommand_reports_calibration() {
    let dir = tmp_dir("oracle");
    let cfg = write_cfg(
        &dir,
        "o.cfg",
        "experiment = oracle\nseed = 0\ngrid.n = 24\ngrid.h = 1.0\nsolver.residual_tol = 1e-3\n",
    );
    let o = run(magpek()
        .args(["oracle", "--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()]));
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("oracle.json")).unwrap()).unwrap();
    assert!(doc["energy"].as_f64().unwrap() < -0.1);
    assert_eq!(doc["calibrated"], serde_json::Value::Bool(true));
    assert!(dir.join("profile.csv").exists());
    std::fs::remove_dir_all(&dir).unwrap();
}
