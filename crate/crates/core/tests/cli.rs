use std::path::Path;
use std::process::Command;

use hjb_core::{MetricsReport, RunOutcome};

fn hjb(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_hjb")).args(args).output().expect("binary runs")
}

fn code(out: &std::process::Output) -> i32 {
    out.status.code().expect("exit code")
}

fn metrics(dir: &Path) -> MetricsReport {
    MetricsReport::from_key_values(&std::fs::read_to_string(dir.join("metrics.toml")).unwrap()).unwrap()
}

#[test]
fn run_writes_csv_metrics_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let out = hjb(&["run", "--example", "III", "--horizon", "5", "--out-dir", dir.path().to_str().unwrap(), "--plot"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "t,x1,x2,tau1,tau2,tau3,V,stage_cost");
    assert_eq!(csv.lines().count(), 5001 + 1);
    assert!(std::fs::read_to_string(dir.path().join("plot.svg")).unwrap().contains("<polyline"));
    assert_eq!(metrics(dir.path()).status, RunOutcome::Converged);
}

#[test]
fn not_converged_run_exits_2_and_still_writes_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let out = hjb(&["run", "--example", "II", "--case", "2", "--horizon", "10", "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    let m = metrics(dir.path());
    assert_eq!(m.status, RunOutcome::NotConverged);
    assert_eq!(m.convergence_time_s, None);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("s.toml");
    std::fs::write(&cfg, "example = \"I\"\nx0 = [1.0, 1.0]\nhorizon = 3.0\n").unwrap();
    let out_dir = dir.path().join("out");
    let out = hjb(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--x0",
        "-2,0.5",
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert!(matches!(code(&out), 0 | 2));
    let csv = std::fs::read_to_string(out_dir.join("trajectory.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().starts_with("0,-2,0.5,"));
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(code(&hjb(&["run", "--example", "I", "--x0", "1,2,3"])), 1);
    assert_eq!(code(&hjb(&["run", "--example", "II"])), 1);
    assert_eq!(code(&hjb(&["verify-gamma", "--example", "I", "--box", "5,-5"])), 1);
    assert_eq!(code(&hjb(&["run", "--example", "I", "--dt", "0.3", "--horizon", "1"])), 1);
}

#[test]
fn verify_gamma_exit_codes() {
    let ok = hjb(&["verify-gamma", "--example", "III", "--box", "-5,5", "--grid", "11"]);
    assert_eq!(code(&ok), 0);
    assert!(String::from_utf8_lossy(&ok.stdout).contains("admissible = true"));
    let bad = hjb(&["verify-gamma", "--example", "I", "--gamma", "-2", "--q0", "0,0;0,0", "--box", "-5,5;-5,5", "--grid", "11"]);
    assert_eq!(code(&bad), 3);
    assert!(String::from_utf8_lossy(&bad.stdout).contains("worst_x"));
}

#[test]
fn bench_filtered_to_one_example() {
    let dir = tempfile::tempdir().unwrap();
    let out = hjb(&["bench", "--example", "I", "--repeats", "1", "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("dt = 0.001") && text.contains("T = 10 s"));
    assert!(text.contains("HJB-SOLA") && text.contains("Proposed method"));
    let csv = std::fs::read_to_string(dir.path().join("bench.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(dir.path().join("bench.txt").is_file());
}
