//! End-to-end tests of the command-line binary: exit codes, output format,
//! determinism of generated files, and the CSV artifacts of the benchmark.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SOFT_1D: &str = "n 1\np 1\nQ\n1\nq\n0\nA\n1\nl\n1\nu\n2\nalpha 10\n";
const HARD_1D: &str = "n 1\np 1\nQ\n1\nq\n0\nA\n1\nl\n1\nu\n2\n";
const INFEASIBLE_HARD: &str = "n 1\np 2\nQ\n1\nq\n0\nA\n1\n1\nl\n-inf\n1\nu\n-1\ninf\n";

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_softqp"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("the binary should run")
}

fn write_problem(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("no signal expected")
}

#[test]
fn solve_reports_the_scalar_solution() {
    let dir = tempfile::tempdir().unwrap();
    let file = write_problem(dir.path(), "scalar.qp", SOFT_1D);
    let out = run(&[
        "solve",
        &file,
        "--method",
        "soft-smoothed",
        "--eps",
        "1e-9",
        "--solution",
    ]);
    let text = stdout(&out);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    assert!(text.contains("status: converged"), "got: {text}");
    assert!(text.contains("objective: 0.454545"), "got: {text}");
    assert!(text.contains("x: 0.909091"), "got: {text}");
    assert!(text.contains("xi: 0.0909091"), "got: {text}");
}

#[test]
fn solve_rejects_a_missing_file() {
    let out = run(&["solve", "/definitely/not/here.qp", "--method", "hard"]);
    assert_eq!(code(&out), 1);
    assert!(
        stderr(&out).contains("error: cannot read"),
        "got: {}",
        stderr(&out)
    );
}

#[test]
fn solve_exits_two_when_the_iteration_cap_is_hit() {
    let dir = tempfile::tempdir().unwrap();
    let file = write_problem(dir.path(), "infeasible.qp", INFEASIBLE_HARD);
    let out = run(&["solve", &file, "--method", "hard", "--max-iter", "50"]);
    assert_eq!(code(&out), 2, "stderr: {}", stderr(&out));
    assert!(
        stdout(&out).contains("status: max_iterations"),
        "got: {}",
        stdout(&out)
    );
}

#[test]
fn solve_without_a_slack_weight_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let file = write_problem(dir.path(), "hard.qp", HARD_1D);
    let out = run(&["solve", &file, "--method", "soft-smoothed"]);
    assert_eq!(code(&out), 1);
    assert!(
        stderr(&out).contains("slack weight"),
        "got: {}",
        stderr(&out)
    );
}

#[test]
fn solve_a_flag_alpha_overrides_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let file = write_problem(dir.path(), "hard.qp", HARD_1D);
    // Same problem as the scalar case once --alpha 10 is supplied.
    let out = run(&[
        "solve",
        &file,
        "--method",
        "soft-augmented",
        "--alpha",
        "10",
        "--eps",
        "1e-9",
        "--solution",
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    assert!(
        stdout(&out).contains("x: 0.909091"),
        "got: {}",
        stdout(&out)
    );
}

#[test]
fn solve_writes_an_iterate_log() {
    let dir = tempfile::tempdir().unwrap();
    let file = write_problem(dir.path(), "scalar.qp", SOFT_1D);
    let log = dir.path().join("iterates.csv");
    let out = run(&[
        "solve",
        &file,
        "--method",
        "soft-smoothed",
        "--log-iterates",
        log.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let text = fs::read_to_string(&log).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("iter,prim_norm,dual_norm,rho"));
    let first = lines.next().expect("at least one iteration row");
    assert_eq!(first.split(',').count(), 4, "got row: {first}");
}

#[test]
fn gen_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.qp");
    let b = dir.path().join("b.qp");
    let c = dir.path().join("c.qp");
    let small = ["--nx", "2", "--nu", "1", "--horizon", "3", "--seed", "11"];
    for path in [&a, &b] {
        let mut args = vec!["gen"];
        args.extend_from_slice(&small);
        args.extend_from_slice(&["--out", path.to_str().unwrap()]);
        assert_eq!(code(&run(&args)), 0);
    }
    let mut args = vec!["gen"];
    args.extend_from_slice(&["--nx", "2", "--nu", "1", "--horizon", "3", "--seed", "12"]);
    args.extend_from_slice(&["--out", c.to_str().unwrap()]);
    assert_eq!(code(&run(&args)), 0);
    assert_eq!(
        fs::read(&a).unwrap(),
        fs::read(&b).unwrap(),
        "same seed, same bytes"
    );
    assert_ne!(
        fs::read(&a).unwrap(),
        fs::read(&c).unwrap(),
        "different seed, different bytes"
    );
}

#[test]
fn gen_reports_the_default_dimensions() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("default.qp");
    let out = run(&["gen", "--out", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    assert!(
        stdout(&out).contains("(n = 124, p = 208)"),
        "got: {}",
        stdout(&out)
    );
}

#[test]
fn gen_output_solves_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tiny.qp");
    let gen = run(&[
        "gen",
        "--nx",
        "2",
        "--nu",
        "1",
        "--horizon",
        "3",
        "--seed",
        "4",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code(&gen), 0, "stderr: {}", stderr(&gen));
    // The generated file carries its own alpha key, so no --alpha is needed.
    let out = run(&["solve", path.to_str().unwrap(), "--method", "soft-smoothed"]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    assert!(
        stdout(&out).contains("status: converged"),
        "got: {}",
        stdout(&out)
    );
}

#[test]
fn gen_rejects_bad_dimensions() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("never.qp");
    let out = run(&["gen", "--nx", "0", "--out", path.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(!path.exists());
}

#[test]
fn bench_timing_study_writes_both_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("results");
    let out = run(&[
        "bench",
        "--study",
        "timing",
        "--scenario",
        "feasible",
        "--instances",
        "2",
        "--nx-list",
        "2",
        "--horizon",
        "2",
        "--eps",
        "1e-4",
        "--timing-repeats",
        "1",
        "--base-seed",
        "5",
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let timing = fs::read_to_string(out_dir.join("timing.csv")).unwrap();
    let mut lines = timing.lines();
    assert_eq!(
        lines.next(),
        Some("instance_id,scenario,method,nx,eps,iterations,wall_time_seconds,status,objective")
    );
    // 2 instances x 2 methods x 1 tolerance x 1 size.
    assert_eq!(lines.count(), 4, "got: {timing}");
    let summary = fs::read_to_string(out_dir.join("speedup_summary.csv")).unwrap();
    assert_eq!(
        summary.lines().next(),
        Some(
            "scenario,nx,eps,median_speedup,speedup_p2sigma_low,speedup_p2sigma_high,\
             median_time_augmented,median_time_smoothed"
        )
    );
    assert_eq!(summary.lines().count(), 2, "got: {summary}");
    assert!(
        !out_dir.join("residuals.csv").exists(),
        "timing study must not write residuals"
    );
}

#[test]
fn bench_residual_study_writes_both_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("results");
    let out = run(&[
        "bench",
        "--study",
        "residuals",
        "--scenario",
        "feasible",
        "--instances",
        "2",
        "--nx",
        "2",
        "--nu",
        "1",
        "--horizon",
        "2",
        "--eps",
        "1e-4",
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let rows = fs::read_to_string(out_dir.join("residuals.csv")).unwrap();
    assert_eq!(
        rows.lines().next(),
        Some("instance_id,scenario,method,iter,prim_norm,dual_norm,rho")
    );
    assert!(
        rows.lines().count() > 2,
        "expected iteration rows, got: {rows}"
    );
    let agg = fs::read_to_string(out_dir.join("residual_aggregates.csv")).unwrap();
    assert_eq!(
        agg.lines().next(),
        Some(
            "scenario,method,iter,count,prim_median,prim_band_low,prim_band_high,\
             dual_median,dual_band_low,dual_band_high"
        )
    );
    assert!(
        !out_dir.join("timing.csv").exists(),
        "residual study must not write timings"
    );
}

#[test]
fn verify_small_run_passes() {
    let out = run(&["verify", "--trials", "2000", "--seed", "3"]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("verification: PASS"), "got: {text}");
    assert!(text.contains("suite "), "got: {text}");
}

#[test]
fn verify_injected_failure_exits_three() {
    let out = run(&["verify", "--trials", "100", "--inject-failure"]);
    assert_eq!(code(&out), 3);
    let text = stdout(&out);
    assert!(text.contains("verification: FAIL"), "got: {text}");
    assert!(text.contains("counterexample"), "got: {text}");
}

#[test]
fn verify_zero_trials_is_a_usage_error() {
    let out = run(&["verify", "--trials", "0"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn unknown_flags_are_usage_errors() {
    let out = run(&[
        "solve",
        "file.qp",
        "--method",
        "hard",
        "--definitely-not-a-flag",
    ]);
    assert_eq!(code(&out), 1);
    let out = run(&["frobnicate"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn help_exits_cleanly() {
    let out = run(&["--help"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("Usage"), "got: {}", stdout(&out));
}
