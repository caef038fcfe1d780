//! Command-line interface: solve problem files, generate MPC instances, run
//! the benchmark studies, and run the solver-vs-oracle verification suites.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 solver non-convergence,
//! 3 verification failure.

use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use softqp::bench::{
    residual_aggregates_csv, residual_rows_csv, run_residual_study, run_timing_study,
    speedup_summary_csv, timing_records_csv, BenchConfig, RecordStatus,
};
use softqp::io::{parse_problem, problem_to_string};
use softqp::linalg::DenseVector;
use softqp::mpc::{assemble, generate, Scenario};
use softqp::oracle::solve_zxi_coordinate;
use softqp::problem::{recover_slack, QpProblem, SoftQpProblem};
use softqp::solver::{
    dual_update, project_hard, project_smoothed, solve_hard, solve_soft_augmented,
    solve_soft_smoothed, step_smoothed, x_update, SolveReport, SolveStatus, SolverSettings,
    SolverState,
};

const EXIT_OK: i32 = 0;
const EXIT_USAGE: i32 = 1;
const EXIT_NO_CONVERGENCE: i32 = 2;
const EXIT_VERIFY_FAILED: i32 = 3;

#[derive(Parser)]
#[command(
    name = "softqp",
    version,
    about = "ADMM solver for box-constrained QPs with soft-constraint (slack) support"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a problem file and print a report.
    Solve(SolveArgs),
    /// Generate a random MPC instance as a problem file.
    Gen(GenArgs),
    /// Run the benchmark studies and write their CSV files.
    Bench(BenchArgs),
    /// Cross-check the solver against the brute-force oracles.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodFlag {
    /// Plain ADMM; constraint violations are never tolerated.
    Hard,
    /// ADMM on the slack-augmented problem with n+p variables.
    SoftAugmented,
    /// ADMM with the smoothed projection and closed-form slack recovery.
    SoftSmoothed,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ScenarioFlag {
    Feasible,
    Infeasible,
}

impl ScenarioFlag {
    fn to_scenario(self) -> Scenario {
        match self {
            ScenarioFlag::Feasible => Scenario::Feasible,
            ScenarioFlag::Infeasible => Scenario::Infeasible,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ScenarioSetFlag {
    Feasible,
    Infeasible,
    Both,
}

impl ScenarioSetFlag {
    fn expand(self) -> Vec<Scenario> {
        match self {
            ScenarioSetFlag::Feasible => vec![Scenario::Feasible],
            ScenarioSetFlag::Infeasible => vec![Scenario::Infeasible],
            ScenarioSetFlag::Both => vec![Scenario::Feasible, Scenario::Infeasible],
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StudyFlag {
    Residuals,
    Timing,
    All,
}

/// Solver settings exposed as flags; unset flags keep the defaults.
#[derive(Args)]
struct SolverFlags {
    /// Convergence tolerance on both residual infinity norms.
    #[arg(long)]
    eps: Option<f64>,
    /// Initial ADMM step size.
    #[arg(long)]
    rho0: Option<f64>,
    /// Iteration cap.
    #[arg(long)]
    max_iter: Option<usize>,
    /// Residual-ratio threshold that triggers a step-size change.
    #[arg(long)]
    kappa: Option<f64>,
    /// Step-size review period in iterations.
    #[arg(long)]
    n_rho: Option<usize>,
    /// Lower clamp on the adapted step size.
    #[arg(long)]
    rho_min: Option<f64>,
    /// Upper clamp on the adapted step size.
    #[arg(long)]
    rho_max: Option<f64>,
    /// Keep the step size fixed at rho0 (disable adaptation).
    #[arg(long)]
    fixed_rho: bool,
}

impl SolverFlags {
    fn build(&self, log_iterates: bool) -> SolverSettings {
        let mut s = SolverSettings::default();
        if let Some(v) = self.eps {
            s.eps = v;
        }
        if let Some(v) = self.rho0 {
            s.rho0 = v;
        }
        if let Some(v) = self.max_iter {
            s.max_iter = v;
        }
        if let Some(v) = self.kappa {
            s.kappa = v;
        }
        if let Some(v) = self.n_rho {
            s.n_rho = v;
        }
        if let Some(v) = self.rho_min {
            s.rho_min = v;
        }
        if let Some(v) = self.rho_max {
            s.rho_max = v;
        }
        s.adaptive_rho = !self.fixed_rho;
        s.log_iterates = log_iterates;
        s
    }
}

#[derive(Args)]
struct SolveArgs {
    /// Problem file to solve.
    file: PathBuf,
    /// Solve route.
    #[arg(long, value_enum)]
    method: MethodFlag,
    /// Slack penalty weight; overrides any alpha key in the file. Soft
    /// methods need one from either place.
    #[arg(long)]
    alpha: Option<f64>,
    /// Also print the solution vectors (x, and xi for soft methods).
    #[arg(long)]
    solution: bool,
    /// Write per-iteration residuals to this CSV path
    /// (columns: iter,prim_norm,dual_norm,rho).
    #[arg(long, value_name = "PATH")]
    log_iterates: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverFlags,
}

#[derive(Args)]
struct GenArgs {
    /// State dimension per stage.
    #[arg(long, default_value_t = 4)]
    nx: usize,
    /// Control dimension per stage.
    #[arg(long, default_value_t = 2)]
    nu: usize,
    /// Horizon length (number of control stages).
    #[arg(long, default_value_t = 20)]
    horizon: usize,
    /// Slack penalty weight written into the file.
    #[arg(long, default_value_t = 10.0)]
    alpha: f64,
    /// Whether the initial state starts inside or outside the state box.
    #[arg(long, value_enum, default_value_t = ScenarioFlag::Feasible)]
    scenario: ScenarioFlag,
    /// RNG seed; the same seed reproduces the file byte for byte.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path for the problem file.
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// Which study to run.
    #[arg(long, value_enum, default_value_t = StudyFlag::All)]
    study: StudyFlag,
    /// Scenario set to cover.
    #[arg(long, value_enum, default_value_t = ScenarioSetFlag::Both)]
    scenario: ScenarioSetFlag,
    /// Instances per scenario.
    #[arg(long, default_value_t = 100)]
    instances: usize,
    /// State dimension for the residual study.
    #[arg(long, default_value_t = 4)]
    nx: usize,
    /// Control dimension for the residual study.
    #[arg(long, default_value_t = 2)]
    nu: usize,
    /// Horizon length for both studies.
    #[arg(long, default_value_t = 20)]
    horizon: usize,
    /// Slack penalty weight.
    #[arg(long, default_value_t = 10.0)]
    alpha: f64,
    /// Tolerances swept by the timing study (comma separated); the residual
    /// study logs at the smallest one.
    #[arg(long, value_delimiter = ',', default_values_t = vec![1e-3, 1e-6])]
    eps: Vec<f64>,
    /// State dimensions swept by the timing study (comma separated, even
    /// entries; each uses nu = nx/2).
    #[arg(long, value_delimiter = ',', default_values_t = vec![4, 16])]
    nx_list: Vec<usize>,
    /// Instance i uses seed base_seed + i.
    #[arg(long, default_value_t = 1)]
    base_seed: u64,
    /// Repeats per timed solve; the minimum wall time is kept.
    #[arg(long, default_value_t = 3)]
    timing_repeats: usize,
    /// Directory for the CSV files (created if missing).
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    /// Random tuples for the per-coordinate suites; the iterate-equivalence
    /// and active-set suites run ceil(trials/5000) and ceil(trials/1000)
    /// instances respectively.
    #[arg(long, default_value_t = 100_000)]
    trials: usize,
    /// RNG seed.
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Self-test of the failure path: report one synthetic counterexample.
    #[arg(long, hide = true)]
    inject_failure: bool,
}

/// Entry point; returns the process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version land here and are not errors.
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    EXIT_OK
                }
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return code;
        }
    };
    match &cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Gen(args) => cmd_gen(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Verify(args) => cmd_verify(args),
    }
}

/// Six significant digits; plain decimal in a sane magnitude window,
/// scientific outside it. File output keeps full precision instead.
fn fmt_sig(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let mag = v.abs().log10().floor() as i32;
    if (-4..10).contains(&mag) {
        let decimals = (5 - mag).max(0) as usize;
        format!("{v:.decimals$}")
    } else {
        format!("{v:.5e}")
    }
}

fn join_sig(v: &DenseVector) -> String {
    v.iter().map(|&x| fmt_sig(x)).collect::<Vec<_>>().join(" ")
}

fn print_report(report: &SolveReport, with_solution: bool) {
    let status = match report.status {
        SolveStatus::Converged => "converged",
        SolveStatus::MaxIterations => "max_iterations",
    };
    println!("status: {status}");
    println!("iterations: {}", report.iterations);
    println!("objective: {}", fmt_sig(report.objective));
    println!("prim_norm: {}", fmt_sig(report.residuals.prim_norm));
    println!("dual_norm: {}", fmt_sig(report.residuals.dual_norm));
    println!(
        "wall_time_seconds: {}",
        fmt_sig(report.wall_time.as_secs_f64())
    );
    if with_solution {
        println!("x: {}", join_sig(&report.x));
        if let Some(xi) = &report.xi {
            println!("xi: {}", join_sig(xi));
        }
    }
}

fn cmd_solve(args: &SolveArgs) -> i32 {
    let text = match fs::read_to_string(&args.file) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", args.file.display());
            return EXIT_USAGE;
        }
    };
    let parsed = match parse_problem(&text) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {}: {e}", args.file.display());
            return EXIT_USAGE;
        }
    };
    let settings = args.solver.build(args.log_iterates.is_some());
    if let Err(e) = settings.validate() {
        eprintln!("error: {e}");
        return EXIT_USAGE;
    }
    let result = match args.method {
        MethodFlag::Hard => solve_hard(&parsed.problem, &settings),
        MethodFlag::SoftAugmented | MethodFlag::SoftSmoothed => {
            let soft = match parsed.to_soft(args.alpha) {
                None => {
                    eprintln!(
                        "error: soft methods need a slack weight: pass --alpha or \
                         add an alpha key to the file"
                    );
                    return EXIT_USAGE;
                }
                Some(Err(e)) => {
                    eprintln!("error: {e}");
                    return EXIT_USAGE;
                }
                Some(Ok(soft)) => soft,
            };
            if args.method == MethodFlag::SoftAugmented {
                solve_soft_augmented(&soft, &settings)
            } else {
                solve_soft_smoothed(&soft, &settings)
            }
        }
    };
    let report = match result {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    if let Some(path) = &args.log_iterates {
        let log = report
            .iterate_log
            .as_ref()
            .expect("logging was switched on");
        let mut csv = String::from("iter,prim_norm,dual_norm,rho\n");
        for rec in log {
            csv.push_str(&format!(
                "{},{:.16e},{:.16e},{:.16e}\n",
                rec.iter, rec.prim_norm, rec.dual_norm, rec.rho
            ));
        }
        if let Err(e) = fs::write(path, csv) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return EXIT_USAGE;
        }
    }
    print_report(&report, args.solution);
    match report.status {
        SolveStatus::Converged => EXIT_OK,
        SolveStatus::MaxIterations => EXIT_NO_CONVERGENCE,
    }
}

fn cmd_gen(args: &GenArgs) -> i32 {
    if args.nx == 0 || args.nu == 0 || args.horizon == 0 {
        eprintln!("error: nx, nu, and horizon must all be at least 1");
        return EXIT_USAGE;
    }
    if !(args.alpha > 0.0 && args.alpha.is_finite()) {
        eprintln!("error: alpha must be a positive finite real");
        return EXIT_USAGE;
    }
    let inst = generate(
        args.nx,
        args.nu,
        args.horizon,
        args.alpha,
        args.scenario.to_scenario(),
        args.seed,
    );
    let prob = assemble(&inst);
    let text = problem_to_string(prob.base(), Some(prob.alpha()));
    if let Err(e) = fs::write(&args.out, text) {
        eprintln!("error: cannot write {}: {e}", args.out.display());
        return EXIT_USAGE;
    }
    println!(
        "wrote {} (n = {}, p = {})",
        args.out.display(),
        prob.base().num_vars(),
        prob.base().num_constraints()
    );
    EXIT_OK
}

fn cmd_bench(args: &BenchArgs) -> i32 {
    let cfg = BenchConfig {
        scenarios: args.scenario.expand(),
        instances: args.instances,
        nx: args.nx,
        nu: args.nu,
        horizon: args.horizon,
        alpha: args.alpha,
        eps_list: args.eps.clone(),
        nx_list: args.nx_list.clone(),
        base_seed: args.base_seed,
        timing_repeats: args.timing_repeats,
    };
    if let Err(e) = cfg.validate() {
        eprintln!("error: {e}");
        return EXIT_USAGE;
    }
    if let Err(e) = fs::create_dir_all(&args.out_dir) {
        eprintln!("error: cannot create {}: {e}", args.out_dir.display());
        return EXIT_USAGE;
    }
    let write = |name: &str, contents: String| -> Result<(), i32> {
        let path = args.out_dir.join(name);
        fs::write(&path, contents).map_err(|e| {
            eprintln!("error: cannot write {}: {e}", path.display());
            EXIT_USAGE
        })?;
        println!("wrote {}", path.display());
        Ok(())
    };
    let mut any_result = false;
    if matches!(args.study, StudyFlag::Residuals | StudyFlag::All) {
        let study = match run_residual_study(&cfg) {
            Ok(s) => s,
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_USAGE;
            }
        };
        for failure in &study.failures {
            eprintln!("warning: {failure}");
        }
        if let Err(code) = write("residuals.csv", residual_rows_csv(&study.rows)) {
            return code;
        }
        if let Err(code) = write(
            "residual_aggregates.csv",
            residual_aggregates_csv(&study.aggregates),
        ) {
            return code;
        }
        any_result |= !study.rows.is_empty();
    }
    if matches!(args.study, StudyFlag::Timing | StudyFlag::All) {
        let study = match run_timing_study(&cfg) {
            Ok(s) => s,
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_USAGE;
            }
        };
        if let Err(code) = write("timing.csv", timing_records_csv(&study.records)) {
            return code;
        }
        if let Err(code) = write("speedup_summary.csv", speedup_summary_csv(&study.summary)) {
            return code;
        }
        any_result |= study
            .records
            .iter()
            .any(|r| r.status != RecordStatus::Failed);
    }
    if any_result {
        EXIT_OK
    } else {
        eprintln!("error: every instance failed to solve");
        EXIT_NO_CONVERGENCE
    }
}

// ---- verification suites -------------------------------------------------

/// Uniform in [0, 1) with 53 random bits.
fn unit(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * 2f64.powi(-53)
}

/// Log-uniform magnitude in [1e-3, 1e3].
fn pos_mag(rng: &mut ChaCha8Rng) -> f64 {
    10f64.powf(-3.0 + 6.0 * unit(rng))
}

/// Log-uniform magnitude in [1e-3, 1e3] with a random sign.
fn signed_mag(rng: &mut ChaCha8Rng) -> f64 {
    let mag = pos_mag(rng);
    if rng.next_u64() & 1 == 0 {
        mag
    } else {
        -mag
    }
}

/// Bounds for coverage class `case % 6`: two-sided, equality, lower-only,
/// upper-only, free, and two-sided again.
fn sample_bounds(rng: &mut ChaCha8Rng, case: usize) -> (f64, f64) {
    match case % 6 {
        1 => {
            let b = signed_mag(rng);
            (b, b)
        }
        2 => (signed_mag(rng), f64::INFINITY),
        3 => (f64::NEG_INFINITY, signed_mag(rng)),
        4 => (f64::NEG_INFINITY, f64::INFINITY),
        _ => {
            let a = signed_mag(rng);
            let b = signed_mag(rng);
            (a.min(b), a.max(b))
        }
    }
}

struct SuiteOutcome {
    name: &'static str,
    trials: usize,
    failures: usize,
    first_counterexample: Option<String>,
}

impl SuiteOutcome {
    fn record_failure(&mut self, counterexample: String) {
        self.failures += 1;
        self.first_counterexample.get_or_insert(counterexample);
    }
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(1.0)
}

/// One-dimensional soft problem with A = [1], so (Ax) = x and the tuple's
/// bounds land on the single row.
fn scalar_soft(l: f64, u: f64, alpha: f64) -> SoftQpProblem {
    let qp = QpProblem::new(
        softqp::linalg::DenseMatrix::identity(1),
        DenseVector::zeros(1),
        softqp::linalg::DenseMatrix::identity(1),
        DenseVector::from_slice(&[l]).unwrap(),
        DenseVector::from_slice(&[u]).unwrap(),
    )
    .unwrap();
    SoftQpProblem::new(qp, alpha).unwrap()
}

/// Oracle (z, xi) per coordinate versus the solver's smoothed projection and
/// closed-form slack recovery, at relative 1e-9.
fn suite_zxi_lemma(trials: usize, rng: &mut ChaCha8Rng) -> SuiteOutcome {
    let mut out = SuiteOutcome {
        name: "zxi-lemma",
        trials,
        failures: 0,
        first_counterexample: None,
    };
    for case in 0..trials {
        let a = signed_mag(rng);
        let mu = signed_mag(rng);
        let rho = pos_mag(rng);
        let alpha = pos_mag(rng);
        let (l, u) = sample_bounds(rng, case);
        let oracle = solve_zxi_coordinate(a, mu, rho, alpha, l, u);
        let zt = a + mu / rho;
        let zt_v = DenseVector::from_slice(&[zt]).unwrap();
        let lv = DenseVector::from_slice(&[l]).unwrap();
        let uv = DenseVector::from_slice(&[u]).unwrap();
        let z_solver = project_smoothed(&zt_v, &lv, &uv, rho, alpha)[0];
        let prob = scalar_soft(l, u, alpha);
        let xi_solver = recover_slack(
            &DenseVector::from_slice(&[a]).unwrap(),
            &DenseVector::from_slice(&[mu]).unwrap(),
            rho,
            &prob,
        )[0];
        if !rel_close(oracle.z, z_solver, 1e-9) || !rel_close(oracle.xi, xi_solver, 1e-9) {
            out.record_failure(format!(
                "tuple (a={a:e}, mu={mu:e}, rho={rho:e}, alpha={alpha:e}, l={l:e}, u={u:e}): \
                 oracle (z={:e}, xi={:e}) vs solver (z={z_solver:e}, xi={xi_solver:e})",
                oracle.z, oracle.xi
            ));
        }
    }
    out
}

/// The smoothed projection versus its averaged form
/// (1-gamma)*v + gamma*Proj(v), gamma = alpha/(alpha+rho), at relative 1e-14,
/// including points exactly on the bounds.
fn suite_averaged_identity(trials: usize, rng: &mut ChaCha8Rng) -> SuiteOutcome {
    let mut out = SuiteOutcome {
        name: "averaged-identity",
        trials,
        failures: 0,
        first_counterexample: None,
    };
    for case in 0..trials {
        let rho = pos_mag(rng);
        let alpha = pos_mag(rng);
        let (l, u) = sample_bounds(rng, case);
        let zt = match case % 5 {
            3 if l.is_finite() => l,
            4 if u.is_finite() => u,
            _ => signed_mag(rng),
        };
        let zt_v = DenseVector::from_slice(&[zt]).unwrap();
        let lv = DenseVector::from_slice(&[l]).unwrap();
        let uv = DenseVector::from_slice(&[u]).unwrap();
        let smoothed = project_smoothed(&zt_v, &lv, &uv, rho, alpha)[0];
        // Weights computed by direct division: the literal 1 - gamma would
        // amplify gamma's rounding error by gamma/(1-gamma) and spoil the
        // comparison for rho << alpha.
        let w_identity = rho / (alpha + rho);
        let w_projection = alpha / (alpha + rho);
        let averaged = w_identity * zt + w_projection * project_hard(&zt_v, &lv, &uv)[0];
        if !rel_close(smoothed, averaged, 1e-14) {
            out.record_failure(format!(
                "point (zt={zt:e}, rho={rho:e}, alpha={alpha:e}, l={l:e}, u={u:e}): \
                 smoothed {smoothed:e} vs averaged {averaged:e}"
            ));
        }
    }
    out
}

/// The smoothed solver loop versus a reference loop whose z-update is the
/// per-coordinate oracle, at fixed rho, entrywise 1e-10 over 50 iterations.
fn suite_iterate_equivalence(instances: usize, seed: u64) -> SuiteOutcome {
    let mut out = SuiteOutcome {
        name: "fixed-rho-iterates",
        trials: instances,
        failures: 0,
        first_counterexample: None,
    };
    let rho = 0.1;
    let alpha = 10.0;
    let settings = SolverSettings {
        rho0: rho,
        adaptive_rho: false,
        ..SolverSettings::default()
    };
    for i in 0..instances {
        let scenario = if i % 2 == 0 {
            Scenario::Feasible
        } else {
            Scenario::Infeasible
        };
        let inst = generate(4, 2, 5, alpha, scenario, seed + i as u64);
        let prob = assemble(&inst);
        let qp = prob.base();
        let p = qp.num_constraints();
        let mut solver_state = match SolverState::new(qp, settings.rho0) {
            Ok(s) => s,
            Err(e) => {
                out.record_failure(format!("instance {i}: {e}"));
                continue;
            }
        };
        let mut ref_state = SolverState::new(qp, settings.rho0).unwrap();
        'iters: for iter in 0..50 {
            step_smoothed(&mut solver_state, qp, alpha);
            ref_state.x = x_update(&ref_state, qp);
            let ax = qp.constraints().matvec(&ref_state.x);
            let mut z_ref = Vec::with_capacity(p);
            for r in 0..p {
                let sol = solve_zxi_coordinate(
                    ax[r],
                    ref_state.mu[r],
                    rho,
                    alpha,
                    qp.lower()[r],
                    qp.upper()[r],
                );
                z_ref.push(sol.z);
            }
            ref_state.z = DenseVector::from_slice(&z_ref).unwrap();
            ref_state.mu = dual_update(&ref_state.mu, &ax, &ref_state.z, rho);
            ref_state.iter += 1;
            for (name, a, b) in [
                ("x", &solver_state.x, &ref_state.x),
                ("z", &solver_state.z, &ref_state.z),
                ("mu", &solver_state.mu, &ref_state.mu),
            ] {
                for k in 0..a.len() {
                    let d = (a[k] - b[k]).abs();
                    if d > 1e-10 {
                        out.record_failure(format!(
                            "instance {i} ({scenario}), iteration {iter}: {name}[{k}] \
                             solver {:e} vs reference {:e} (|diff| = {d:e})",
                            a[k], b[k]
                        ));
                        break 'iters;
                    }
                }
            }
        }
    }
    out
}

/// Full ADMM solve of random tiny soft QPs versus the exhaustive active-set
/// oracle, x and xi within 1e-4 in the infinity norm.
fn suite_active_set(instances: usize, rng: &mut ChaCha8Rng) -> SuiteOutcome {
    let mut out = SuiteOutcome {
        name: "active-set",
        trials: instances,
        failures: 0,
        first_counterexample: None,
    };
    let settings = SolverSettings {
        eps: 1e-8,
        ..SolverSettings::default()
    };
    for i in 0..instances {
        let n = 1 + (rng.next_u64() % 4) as usize;
        let p = 1 + (rng.next_u64() % 5) as usize;
        let prob = random_tiny_soft_qp(rng, n, p);
        let reference = match softqp::oracle::solve_soft_qp_reference(&prob) {
            Ok(r) => r,
            Err(e) => {
                out.record_failure(format!("instance {i} (n={n}, p={p}): oracle: {e}"));
                continue;
            }
        };
        let report = match solve_soft_smoothed(&prob, &settings) {
            Ok(r) => r,
            Err(e) => {
                out.record_failure(format!("instance {i} (n={n}, p={p}): solver: {e}"));
                continue;
            }
        };
        let xi = report.xi.as_ref().expect("soft solve always recovers xi");
        let mut worst_x = 0.0f64;
        for k in 0..n {
            worst_x = worst_x.max((report.x[k] - reference.x[k]).abs());
        }
        let mut worst_xi = 0.0f64;
        for r in 0..p {
            worst_xi = worst_xi.max((xi[r] - reference.x[n + r]).abs());
        }
        if worst_x > 1e-4 || worst_xi > 1e-4 {
            out.record_failure(format!(
                "instance {i} (n={n}, p={p}): |x diff| = {worst_x:e}, |xi diff| = {worst_xi:e}"
            ));
        }
    }
    out
}

/// Random strictly convex soft QP small enough for the exhaustive oracle:
/// Q = M M' + I, normal data, and rows drawing two-sided, equality,
/// one-sided, and free bounds.
fn random_tiny_soft_qp(rng: &mut ChaCha8Rng, n: usize, p: usize) -> SoftQpProblem {
    let normal = |rng: &mut ChaCha8Rng| {
        let u1 = unit(rng);
        let u2 = unit(rng);
        (-2.0 * (1.0 - u1).ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    };
    let mut m = vec![0.0; n * n];
    for v in &mut m {
        *v = normal(rng);
    }
    let mut qdata = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let mut acc = if i == j { 1.0 } else { 0.0 };
            for k in 0..n {
                acc += m[i * n + k] * m[j * n + k];
            }
            qdata[i * n + j] = acc;
        }
    }
    let q: Vec<f64> = (0..n).map(|_| normal(rng)).collect();
    let a: Vec<f64> = (0..n * p).map(|_| normal(rng)).collect();
    let mut lower = Vec::with_capacity(p);
    let mut upper = Vec::with_capacity(p);
    for r in 0..p {
        match r % 4 {
            0 => {
                let b1 = normal(rng);
                let b2 = normal(rng);
                lower.push(b1.min(b2));
                upper.push(b1.max(b2));
            }
            1 => {
                let b = normal(rng);
                lower.push(b);
                upper.push(b);
            }
            2 => {
                lower.push(normal(rng));
                upper.push(f64::INFINITY);
            }
            _ => {
                lower.push(f64::NEG_INFINITY);
                upper.push(normal(rng));
            }
        }
    }
    let qp = QpProblem::new(
        softqp::linalg::DenseMatrix::new(n, n, qdata).unwrap(),
        DenseVector::from_slice(&q).unwrap(),
        softqp::linalg::DenseMatrix::new(p, n, a).unwrap(),
        DenseVector::from_slice(&lower).unwrap(),
        DenseVector::from_slice(&upper).unwrap(),
    )
    .unwrap();
    SoftQpProblem::new(qp, 10.0).unwrap()
}

fn cmd_verify(args: &VerifyArgs) -> i32 {
    if args.trials == 0 {
        eprintln!("error: trials must be at least 1");
        return EXIT_USAGE;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut outcomes = vec![
        suite_zxi_lemma(args.trials, &mut rng),
        suite_averaged_identity(args.trials, &mut rng),
        suite_iterate_equivalence(args.trials.div_ceil(5000), args.seed),
        suite_active_set(args.trials.div_ceil(1000), &mut rng),
    ];
    if args.inject_failure {
        let mut injected = SuiteOutcome {
            name: "self-test",
            trials: 1,
            failures: 0,
            first_counterexample: None,
        };
        injected.record_failure(
            "tuple (a=0e0, mu=0e0, rho=1e0, alpha=1e0, l=0e0, u=0e0): \
             injected mismatch z=1e0 vs z=2e0"
                .to_string(),
        );
        outcomes.push(injected);
    }
    let mut all_pass = true;
    for outcome in &outcomes {
        println!(
            "suite {}: {} passed, {} failed",
            outcome.name,
            outcome.trials - outcome.failures,
            outcome.failures
        );
        if let Some(cx) = &outcome.first_counterexample {
            println!("  counterexample: {cx}");
            all_pass = false;
        }
    }
    if all_pass {
        println!("verification: PASS");
        EXIT_OK
    } else {
        println!("verification: FAIL");
        EXIT_VERIFY_FAILED
    }
}
