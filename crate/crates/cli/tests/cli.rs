use std::fs;
use std::process::Command;

use biharm::mesh::{import_mesh, PolyMesh};

fn study() -> Command {
    Command::new(env!("CARGO_BIN_EXE_study"))
}

#[test]
fn mesh_command_writes_importable_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("hex.json");
    let status = study()
        .args(["mesh", "--kind", "hexagonal", "--n", "3", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(status.status.success(), "{status:?}");
    assert!(String::from_utf8_lossy(&status.stdout).contains("cells"));
    let mesh: PolyMesh<f64> = import_mesh(&fs::read_to_string(&out).unwrap()).unwrap();
    assert!(mesh.n_cells() > 0);
    let area: f64 = (0..mesh.n_cells()).map(|c| mesh.cell(c).area).sum();
    assert!((area - 1.0).abs() < 1e-12);
}

#[test]
fn mesh_command_rejects_unknown_kind() {
    let dir = tempfile::tempdir().unwrap();
    let out = study()
        .args(["mesh", "--kind", "voronoi", "--n", "3", "--out"])
        .arg(dir.path().join("m.json"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

fn write_config(dir: &std::path::Path, extra: &str) -> std::path::PathBuf {
    let path = dir.join("study.cfg");
    let text = format!(
        "methods = wg, sip\ndegrees = 2\nlevels = 4, 8\noutput = {}\n{extra}",
        dir.join("out").display()
    );
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn run_command_writes_reports_and_reports_gates() {
    let dir = tempfile::tempdir().unwrap();
    // coarse levels: loosen the rate and growth gates
    let cfg = write_config(
        dir.path(),
        "rate.l2 = 0.5\nrate.h1 = 0.5\ngate.max_growth = 2\n",
    );
    let out = study()
        .args(["run", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{stdout}");
    assert!(stdout.contains("PASS wg k=2 cartesian: energy EOC"));
    assert!(dir.path().join("out/report.csv").exists());
    assert!(dir.path().join("out/summary.json").exists());

    // the default growth gate fails on these pre-asymptotic levels
    let cfg = write_config(dir.path(), "");
    let out = study()
        .args(["run", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}

#[test]
fn run_command_reports_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "methods = wg\ndegrees = two\nlevels = 4\n").unwrap();
    let out = study()
        .args(["run", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn check_command_runs_selected_criteria() {
    let out = study()
        .args(["check", "-c", "9", "-c", "2"])
        .output()
        .unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{stdout}");
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("criterion 9 exact representability: PASS"));
    assert!(lines[1].starts_with("criterion 2 oracle equivalence: PASS"));
    let out = study().args(["check", "-c", "12"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
