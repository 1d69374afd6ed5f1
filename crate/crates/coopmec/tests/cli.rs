use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use coopmec::report::{read_csv, InfeasibleReport};
use coopmec_core::{Feasibility, SolveReport};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_coopmec"))
}

fn repo_config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn coopmec")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

const SMALL_SWEEP: &str = r#"
seed = 11

[nodes]
count = 3

[channel_means]
pt_pr = 1e-6

[sweep]
alpha_grid = [0.2, 0.8]
trials = 4
placements = [50, 80]
energy_levels = [1.0]
"#;

#[test]
fn solve_shipped_config_is_optimal() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let cfg = repo_config("table1.toml");
    let o = run(&["solve", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report: SolveReport = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert!(report.gap <= 1e-3, "gap {}", report.gap);
    assert_eq!(report.solution.t_off.len(), 20);
    assert!(matches!(report.feasibility, Feasibility::Feasible { .. }));
}

#[test]
fn solve_equal_method_writes_report_to_stdout() {
    let cfg = repo_config("table1.toml");
    let o = run(&["solve", "--config", cfg.to_str().unwrap(), "--method", "equal"]);
    assert_eq!(o.status.code(), Some(0));
    let report: SolveReport = serde_json::from_slice(&o.stdout).unwrap();
    assert!(report.gap <= 1e-3);
}

#[test]
fn dead_pt_ap_link_exits_infeasible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "dead.toml", "[channels]\npt_ap = 0.0\n");
    let o = run(&["solve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("tau_r_lb"), "{text}");
    let report: InfeasibleReport = serde_json::from_str(&text).unwrap();
    match report.feasibility {
        Feasibility::Infeasible { tau_r_lb, .. } => assert!(tau_r_lb > 0.1),
        other => panic!("expected infeasible, got {other:?}"),
    }
}

#[test]
fn malformed_number_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", "[system]\nbandwidth = \"wide\"\n");
    let o = run(&["solve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bandwidth"), "{err}");
}

#[test]
fn out_of_range_value_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", "[system]\nalpha = 1.5\n");
    let o = run(&["solve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("alpha"));
}

#[test]
fn missing_config_and_bad_flags_exit_one() {
    assert_eq!(run(&["solve", "--config", "/nonexistent/x.toml"]).status.code(), Some(1));
    assert_eq!(run(&["solve"]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn sweep_with_zero_trials_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "s.toml", SMALL_SWEEP);
    let o = run(&["sweep", "--config", cfg.to_str().unwrap(), "--trials", "0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("trials"));
}

#[test]
fn sweep_csv_is_deterministic_and_parses() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "s.toml", SMALL_SWEEP);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let cfg = cfg.to_str().unwrap();
    assert_eq!(run(&["sweep", "--config", cfg, "--threads", "1", "--out", a.to_str().unwrap()]).status.code(), Some(0));
    assert_eq!(run(&["sweep", "--config", cfg, "--threads", "3", "--out", b.to_str().unwrap()]).status.code(), Some(0));
    let (a, b) = (fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(a, b);

    let rows = read_csv(a.as_slice()).unwrap();
    // 2 alphas x 2 placements x 1 energy x 7 metrics.
    assert_eq!(rows.len(), 28);
    assert!(rows.iter().all(|r| r.n_total == 4 && r.n_feasible <= 4));
    assert!(rows.iter().any(|r| r.n_feasible > 0));
}

#[test]
fn sweep_seed_flag_changes_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "s.toml", SMALL_SWEEP);
    let cfg = cfg.to_str().unwrap();
    let a = run(&["sweep", "--config", cfg, "--seed", "1"]);
    let b = run(&["sweep", "--config", cfg, "--seed", "2"]);
    assert_eq!(a.status.code(), Some(0));
    assert_ne!(a.stdout, b.stdout);
}

#[test]
fn certify_refuses_three_nodes() {
    let cfg = repo_config("table1.toml");
    let o = run(&["certify", "--config", cfg.to_str().unwrap(), "--nodes", "3"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("oracle limited to M"));
}

#[test]
fn certify_one_node_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", "seed = 3\n[certify]\nnodes = 1\ntrials = 3\n");
    let o = run(&["certify", "--config", cfg.to_str().unwrap(), "--grid", "30"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8_lossy(&o.stdout).contains("grid"));
}

#[test]
fn solve_report_roundtrips_through_json() {
    let cfg = repo_config("table1.toml");
    let o = run(&["solve", "--config", cfg.to_str().unwrap()]);
    let report: SolveReport = serde_json::from_slice(&o.stdout).unwrap();
    let again: SolveReport = serde_json::from_str(&serde_json::to_string(&report).unwrap()).unwrap();
    assert_eq!(report, again);
}
