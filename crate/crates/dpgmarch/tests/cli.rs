use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_dpgmarch");

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, body).unwrap();
    path
}

fn base(dir: &Path) -> PathBuf {
    let out = dir.join("out.csv");
    write_config(
        dir,
        &format!(
            r#"{{"case_id": "stationary-adr", "p": 0, "levels": [4, 8], "k_policy": "fixed",
                 "k": 0.05, "T_end": 0.25, "output_path": {:?}}}"#,
            out.to_str().unwrap()
        ),
    )
}

fn run(command: &str, config: &Path, overrides: &[&str]) -> Output {
    Command::new(BIN)
        .arg(command)
        .arg("--config")
        .arg(config)
        .args(overrides)
        .output()
        .unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn heat_identity_passes_for_heat_case() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = base(dir.path());
    let out = run(
        "heat-identity",
        &cfg,
        &["case_id=heat-decay", "levels=[8]", "k=0.01", "T_end=0.1"],
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{stdout}");
    assert!(stdout.contains("PASS"));
    assert_eq!(csv_rows(&dir.path().join("out.csv")).len(), 11);
}

#[test]
fn heat_identity_fails_with_advection() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = base(dir.path());
    let out = run("heat-identity", &cfg, &["case_id=adr-decay", "levels=[8]", "k=0.01", "T_end=0.05"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}

#[test]
fn converge_space_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = base(dir.path());
    let out = run("converge-space", &cfg, &["levels=4,8,16"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(&dir.path().join("out.csv"));
    assert_eq!(rows[0].join(","), "level,h_max,k,n_field,n_trace,err_L2,err_H1_semi,err_trace_dual,eoc_L2,eoc_H1,eoc_trace");
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[1][8], "");
    let h1: Vec<f64> = rows[1..].iter().map(|r| r[6].parse().unwrap()).collect();
    assert!(h1.windows(2).all(|w| w[1] < w[0]));
    let rate: f64 = rows[3][9].parse().unwrap();
    assert!(rate > 0.85, "{rate}");
}

#[test]
fn identical_config_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = base(dir.path());
    assert_eq!(run("converge-space", &cfg, &[]).status.code(), Some(0));
    let first = std::fs::read(dir.path().join("out.csv")).unwrap();
    assert_eq!(run("converge-space", &cfg, &[]).status.code(), Some(0));
    assert_eq!(first, std::fs::read(dir.path().join("out.csv")).unwrap());
}

#[test]
fn run_with_snapshot_writes_vtk() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = base(dir.path());
    let out = run("run", &cfg, &["snapshot=true", "levels=[6]"]);
    assert_eq!(out.status.code(), Some(0));
    let vtk = std::fs::read_to_string(dir.path().join("out.vtk")).unwrap();
    assert!(vtk.starts_with("# vtk DataFile"));
    assert!(vtk.contains("POINTS 49 double"));
    assert!(vtk.contains("SCALARS u double 1"));
}

#[test]
fn converge_time_and_projection_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = base(dir.path());
    let out = run(
        "converge-time",
        &cfg,
        &["case_id=heat-decay", "levels=[8]", "k_policy=list", "k_list=0.25,0.125", "k_ref=0.03125", "T_end=1"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(csv_rows(&dir.path().join("out.csv")).len(), 3);
    let out = run("converge-projection", &cfg, &["case_id=aniso", "p=1"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(csv_rows(&dir.path().join("out.csv")).len(), 3);
}

#[test]
fn invalid_input_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = base(dir.path());
    assert_eq!(run("run", &cfg, &["case_id=unknown"]).status.code(), Some(2));
    assert_eq!(run("run", &cfg, &["k_policy=weekly"]).status.code(), Some(2));
    assert_eq!(run("run", &cfg, &["notanoverride"]).status.code(), Some(2));
    assert_eq!(run("run", &dir.path().join("missing.json"), &[]).status.code(), Some(2));
    let broken = write_config(dir.path(), "{ not json");
    assert_eq!(run("run", &broken, &[]).status.code(), Some(2));
}

#[test]
fn solver_failure_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = base(dir.path());
    let out = run("run", &cfg, &["cg_tol=1e-300"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("CG"));
}
