//! Benchmark harness over random MPC instances: a residual-trajectory study
//! (per-iteration convergence curves with median and ±2σ bands across
//! instances) and a timing study (wall-time speedup of the smoothed scheme
//! over the slack-augmented scheme, across tolerances and state dimensions),
//! both exported as CSV text.
//!
//! The timing study runs strictly sequentially on one thread so that solves
//! never contend with each other; the timed region is exactly the solver call
//! (factorization included, generation and CSV assembly excluded).

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::mpc::{assemble, generate, Scenario};
use crate::problem::SoftQpProblem;
use crate::solver::{
    solve_soft_augmented, solve_soft_smoothed, SolveReport, SolveStatus, SolverError,
    SolverSettings,
};

/// Configuration problems are reported before any instance is generated.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BenchError {
    #[error("invalid benchmark configuration: {reason}")]
    InvalidConfig { reason: String },
}

/// The two soft-QP solve routes under comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    SoftAugmented,
    SoftSmoothed,
}

/// Both methods, in the order they appear in every study and CSV.
pub const METHODS: [Method; 2] = [Method::SoftAugmented, Method::SoftSmoothed];

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::SoftAugmented => "soft-augmented",
            Method::SoftSmoothed => "soft-smoothed",
        })
    }
}

/// Outcome of one timed solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordStatus {
    Converged,
    MaxIterations,
    Failed,
}

impl fmt::Display for RecordStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RecordStatus::Converged => "converged",
            RecordStatus::MaxIterations => "max_iterations",
            RecordStatus::Failed => "failed",
        })
    }
}

/// Knobs for both studies.
///
/// `nx`, `nu`, and `horizon` size the residual study's instances; the timing
/// study instead sweeps `nx_list` with `nu = nx/2` (hence the even-entry
/// requirement) at the same `horizon`. Instance `i` always uses seed
/// `base_seed + i`, so the two methods, every tolerance, and repeated runs
/// all see identical instances.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub scenarios: Vec<Scenario>,
    pub instances: usize,
    pub nx: usize,
    pub nu: usize,
    pub horizon: usize,
    pub alpha: f64,
    pub eps_list: Vec<f64>,
    pub nx_list: Vec<usize>,
    pub base_seed: u64,
    pub timing_repeats: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            scenarios: vec![Scenario::Feasible, Scenario::Infeasible],
            instances: 100,
            nx: 4,
            nu: 2,
            horizon: 20,
            alpha: 10.0,
            eps_list: vec![1e-3, 1e-6],
            nx_list: vec![4, 16],
            base_seed: 1,
            timing_repeats: 3,
        }
    }
}

impl BenchConfig {
    /// Rejects configurations no study could run meaningfully.
    pub fn validate(&self) -> Result<(), BenchError> {
        let fail = |reason: &str| {
            Err(BenchError::InvalidConfig {
                reason: reason.to_string(),
            })
        };
        if self.scenarios.is_empty() {
            return fail("scenarios must be nonempty");
        }
        if self.instances == 0 {
            return fail("instances must be at least 1");
        }
        if self.nx == 0 || self.nu == 0 || self.horizon == 0 {
            return fail("nx, nu, and horizon must all be at least 1");
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return fail("alpha must be a positive finite real");
        }
        if self.eps_list.is_empty() {
            return fail("eps_list must be nonempty");
        }
        if self.eps_list.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return fail("every tolerance in eps_list must be a positive finite real");
        }
        if self.nx_list.is_empty() {
            return fail("nx_list must be nonempty");
        }
        if self.nx_list.iter().any(|nx| *nx == 0 || nx % 2 != 0) {
            return fail("every entry of nx_list must be even and nonzero so nu = nx/2 is a whole positive count");
        }
        if self.timing_repeats == 0 {
            return fail("timing_repeats must be at least 1");
        }
        Ok(())
    }
}

/// One timed solve of one instance by one method.
#[derive(Debug, Clone)]
pub struct BenchRecord {
    pub instance_id: usize,
    pub scenario: Scenario,
    pub method: Method,
    pub nx: usize,
    pub eps: f64,
    pub iterations: usize,
    /// Best-of-repeats wall time; 0 when the solve failed outright.
    pub wall_time_seconds: f64,
    pub status: RecordStatus,
    pub final_prim_norm: f64,
    pub final_dual_norm: f64,
    pub objective: f64,
}

/// One logged iteration of one solve (long-format residual data).
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualRow {
    pub instance_id: usize,
    pub scenario: Scenario,
    pub method: Method,
    pub iter: usize,
    pub prim_norm: f64,
    pub dual_norm: f64,
    pub rho: f64,
}

/// Median and ±2 sample-standard-deviation band of the residual norms at one
/// iteration index, across the `count` instances still running there.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualAggregate {
    pub scenario: Scenario,
    pub method: Method,
    pub iter: usize,
    pub count: usize,
    pub prim_median: f64,
    pub prim_band_low: f64,
    pub prim_band_high: f64,
    pub dual_median: f64,
    pub dual_band_low: f64,
    pub dual_band_high: f64,
}

/// Everything the residual study produces.
#[derive(Debug, Clone)]
pub struct ResidualStudy {
    pub rows: Vec<ResidualRow>,
    pub aggregates: Vec<ResidualAggregate>,
    /// Per-instance solver failures, recorded rather than fatal.
    pub failures: Vec<String>,
}

/// Speedup statistics for one (scenario, nx, eps) cell: per-instance ratio
/// `augmented time / smoothed time` (> 1 means the smoothed scheme is
/// faster), median and ±2σ over the instances where both methods converged.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeedupSummary {
    pub scenario: Scenario,
    pub nx: usize,
    pub eps: f64,
    pub median_speedup: f64,
    pub speedup_p2sigma_low: f64,
    pub speedup_p2sigma_high: f64,
    pub median_time_augmented: f64,
    pub median_time_smoothed: f64,
}

/// Everything the timing study produces.
#[derive(Debug, Clone)]
pub struct TimingStudy {
    pub records: Vec<BenchRecord>,
    pub summary: Vec<SpeedupSummary>,
}

/// Median of `values`; the even case averages the two middle order
/// statistics.
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of an empty slice");
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("median: values must not be NaN"));
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Sample standard deviation (n−1 denominator); 0 for fewer than two values,
/// and exactly 0 for a constant series.
pub fn std_dev(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    var.sqrt()
}

fn solve_with(
    method: Method,
    prob: &SoftQpProblem,
    settings: &SolverSettings,
) -> Result<SolveReport, SolverError> {
    match method {
        Method::SoftAugmented => solve_soft_augmented(prob, settings),
        Method::SoftSmoothed => solve_soft_smoothed(prob, settings),
    }
}

/// Solves every instance with both methods at the smallest tolerance in
/// `eps_list`, logging residual norms each iteration, then aggregates the
/// curves across instances (median, ±2σ, and how many instances reach each
/// iteration index). Solver failures are recorded in `failures` and the
/// study continues.
pub fn run_residual_study(cfg: &BenchConfig) -> Result<ResidualStudy, BenchError> {
    cfg.validate()?;
    let eps = cfg.eps_list.iter().cloned().fold(f64::INFINITY, f64::min);
    let settings = SolverSettings {
        eps,
        log_iterates: true,
        ..SolverSettings::default()
    };
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for &scenario in &cfg.scenarios {
        for instance_id in 0..cfg.instances {
            let seed = cfg.base_seed + instance_id as u64;
            let inst = generate(cfg.nx, cfg.nu, cfg.horizon, cfg.alpha, scenario, seed);
            let prob = assemble(&inst);
            for method in METHODS {
                match solve_with(method, &prob, &settings) {
                    Ok(report) => {
                        let log = report
                            .iterate_log
                            .expect("iterate logging was switched on for this study");
                        rows.extend(log.iter().map(|rec| ResidualRow {
                            instance_id,
                            scenario,
                            method,
                            iter: rec.iter,
                            prim_norm: rec.prim_norm,
                            dual_norm: rec.dual_norm,
                            rho: rec.rho,
                        }));
                    }
                    Err(e) => failures.push(format!(
                        "instance {instance_id} ({scenario}, {method}): {e}"
                    )),
                }
            }
        }
    }
    let aggregates = aggregate_rows(&rows);
    Ok(ResidualStudy {
        rows,
        aggregates,
        failures,
    })
}

/// Per-group series of primal and dual norms, one entry per instance.
type NormSeries = (Vec<f64>, Vec<f64>);

/// Groups long-format rows by (scenario, method, iteration index) and
/// reduces each group to its median and ±2σ band, in deterministic order.
pub fn aggregate_rows(rows: &[ResidualRow]) -> Vec<ResidualAggregate> {
    let mut groups: BTreeMap<(Scenario, Method, usize), NormSeries> = BTreeMap::new();
    for row in rows {
        let entry = groups
            .entry((row.scenario, row.method, row.iter))
            .or_default();
        entry.0.push(row.prim_norm);
        entry.1.push(row.dual_norm);
    }
    groups
        .into_iter()
        .map(|((scenario, method, iter), (prim, dual))| {
            let prim_median = median(&prim);
            let prim_sd = std_dev(&prim);
            let dual_median = median(&dual);
            let dual_sd = std_dev(&dual);
            ResidualAggregate {
                scenario,
                method,
                iter,
                count: prim.len(),
                prim_median,
                prim_band_low: prim_median - 2.0 * prim_sd,
                prim_band_high: prim_median + 2.0 * prim_sd,
                dual_median,
                dual_band_low: dual_median - 2.0 * dual_sd,
                dual_band_high: dual_median + 2.0 * dual_sd,
            }
        })
        .collect()
}

/// Identity of one timing measurement, copied verbatim into its record.
#[derive(Debug, Clone, Copy)]
struct RecordTag {
    instance_id: usize,
    scenario: Scenario,
    nx: usize,
    eps: f64,
}

fn time_one(
    tag: RecordTag,
    method: Method,
    prob: &SoftQpProblem,
    settings: &SolverSettings,
    repeats: usize,
) -> BenchRecord {
    let mut best_time = f64::INFINITY;
    let mut last: Option<SolveReport> = None;
    for _ in 0..repeats {
        match solve_with(method, prob, settings) {
            Ok(report) => {
                best_time = best_time.min(report.wall_time.as_secs_f64());
                last = Some(report);
            }
            Err(_) => {
                last = None;
                break;
            }
        }
    }
    match last {
        Some(report) => BenchRecord {
            instance_id: tag.instance_id,
            scenario: tag.scenario,
            method,
            nx: tag.nx,
            eps: tag.eps,
            iterations: report.iterations,
            wall_time_seconds: best_time,
            status: match report.status {
                SolveStatus::Converged => RecordStatus::Converged,
                SolveStatus::MaxIterations => RecordStatus::MaxIterations,
            },
            final_prim_norm: report.residuals.prim_norm,
            final_dual_norm: report.residuals.dual_norm,
            objective: report.objective,
        },
        None => BenchRecord {
            instance_id: tag.instance_id,
            scenario: tag.scenario,
            method,
            nx: tag.nx,
            eps: tag.eps,
            iterations: 0,
            wall_time_seconds: 0.0,
            status: RecordStatus::Failed,
            final_prim_norm: f64::NAN,
            final_dual_norm: f64::NAN,
            objective: f64::NAN,
        },
    }
}

/// Times both methods on identical instances for every (nx in `nx_list`,
/// scenario, instance, eps in `eps_list`) combination, best-of-repeats per
/// solve with logging disabled, then summarizes speedups per cell. Strictly
/// sequential by contract.
pub fn run_timing_study(cfg: &BenchConfig) -> Result<TimingStudy, BenchError> {
    cfg.validate()?;
    let mut records = Vec::new();
    for &nx in &cfg.nx_list {
        let nu = nx / 2;
        for &scenario in &cfg.scenarios {
            for instance_id in 0..cfg.instances {
                let seed = cfg.base_seed + instance_id as u64;
                let inst = generate(nx, nu, cfg.horizon, cfg.alpha, scenario, seed);
                let prob = assemble(&inst);
                for &eps in &cfg.eps_list {
                    let settings = SolverSettings {
                        eps,
                        log_iterates: false,
                        ..SolverSettings::default()
                    };
                    let tag = RecordTag {
                        instance_id,
                        scenario,
                        nx,
                        eps,
                    };
                    for method in METHODS {
                        records.push(time_one(tag, method, &prob, &settings, cfg.timing_repeats));
                    }
                }
            }
        }
    }
    let summary = summarize(&records);
    Ok(TimingStudy { records, summary })
}

/// Augmented/smoothed records of one instance, in that slot order.
type MethodPair<'a> = [Option<&'a BenchRecord>; 2];

/// Reduces timing records to one [`SpeedupSummary`] per (scenario, nx, eps)
/// cell. Only instances where both methods converged enter the statistics;
/// cells with no such pair produce no row.
pub fn summarize(records: &[BenchRecord]) -> Vec<SpeedupSummary> {
    // Positive finite f64 bit patterns order the same way the values do, so
    // eps.to_bits() is a valid BTreeMap sort key here.
    let mut cells: BTreeMap<(Scenario, usize, u64), BTreeMap<usize, MethodPair<'_>>> =
        BTreeMap::new();
    for rec in records {
        let slot = match rec.method {
            Method::SoftAugmented => 0,
            Method::SoftSmoothed => 1,
        };
        cells
            .entry((rec.scenario, rec.nx, rec.eps.to_bits()))
            .or_default()
            .entry(rec.instance_id)
            .or_insert([None, None])[slot] = Some(rec);
    }
    let mut out = Vec::new();
    for ((scenario, nx, eps_bits), pairs) in cells {
        let mut ratios = Vec::new();
        let mut aug_times = Vec::new();
        let mut smooth_times = Vec::new();
        for pair in pairs.values() {
            if let [Some(aug), Some(smooth)] = pair {
                if aug.status == RecordStatus::Converged && smooth.status == RecordStatus::Converged
                {
                    ratios.push(aug.wall_time_seconds / smooth.wall_time_seconds);
                    aug_times.push(aug.wall_time_seconds);
                    smooth_times.push(smooth.wall_time_seconds);
                }
            }
        }
        if ratios.is_empty() {
            continue;
        }
        let med = median(&ratios);
        let sd = std_dev(&ratios);
        out.push(SpeedupSummary {
            scenario,
            nx,
            eps: f64::from_bits(eps_bits),
            median_speedup: med,
            speedup_p2sigma_low: med - 2.0 * sd,
            speedup_p2sigma_high: med + 2.0 * sd,
            median_time_augmented: median(&aug_times),
            median_time_smoothed: median(&smooth_times),
        });
    }
    out
}

/// All CSV floats carry 17 significant digits so files round-trip exactly.
fn fmt_full(v: f64) -> String {
    format!("{v:.16e}")
}

/// Long-format residual CSV: `instance_id,scenario,method,iter,prim_norm,dual_norm,rho`.
pub fn residual_rows_csv(rows: &[ResidualRow]) -> String {
    let mut out = String::from("instance_id,scenario,method,iter,prim_norm,dual_norm,rho\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.instance_id,
            r.scenario,
            r.method,
            r.iter,
            fmt_full(r.prim_norm),
            fmt_full(r.dual_norm),
            fmt_full(r.rho),
        ));
    }
    out
}

/// Aggregated residual CSV:
/// `scenario,method,iter,count,prim_median,prim_band_low,prim_band_high,dual_median,dual_band_low,dual_band_high`.
pub fn residual_aggregates_csv(aggregates: &[ResidualAggregate]) -> String {
    let mut out = String::from(
        "scenario,method,iter,count,prim_median,prim_band_low,prim_band_high,dual_median,dual_band_low,dual_band_high\n",
    );
    for a in aggregates {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            a.scenario,
            a.method,
            a.iter,
            a.count,
            fmt_full(a.prim_median),
            fmt_full(a.prim_band_low),
            fmt_full(a.prim_band_high),
            fmt_full(a.dual_median),
            fmt_full(a.dual_band_low),
            fmt_full(a.dual_band_high),
        ));
    }
    out
}

/// Timing CSV: `instance_id,scenario,method,nx,eps,iterations,wall_time_seconds,status,objective`.
pub fn timing_records_csv(records: &[BenchRecord]) -> String {
    let mut out = String::from(
        "instance_id,scenario,method,nx,eps,iterations,wall_time_seconds,status,objective\n",
    );
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.instance_id,
            r.scenario,
            r.method,
            r.nx,
            fmt_full(r.eps),
            r.iterations,
            fmt_full(r.wall_time_seconds),
            r.status,
            fmt_full(r.objective),
        ));
    }
    out
}

/// Summary CSV:
/// `scenario,nx,eps,median_speedup,speedup_p2sigma_low,speedup_p2sigma_high,median_time_augmented,median_time_smoothed`.
pub fn speedup_summary_csv(summary: &[SpeedupSummary]) -> String {
    let mut out = String::from(
        "scenario,nx,eps,median_speedup,speedup_p2sigma_low,speedup_p2sigma_high,median_time_augmented,median_time_smoothed\n",
    );
    for s in summary {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            s.scenario,
            s.nx,
            fmt_full(s.eps),
            fmt_full(s.median_speedup),
            fmt_full(s.speedup_p2sigma_low),
            fmt_full(s.speedup_p2sigma_high),
            fmt_full(s.median_time_augmented),
            fmt_full(s.median_time_smoothed),
        ));
    }
    out
}
