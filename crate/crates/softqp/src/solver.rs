//! The ADMM engine with three interchangeable variants.
//!
//! All three solve paths share one loop: minimize the augmented Lagrangian
//! over `x` (a cached SPD solve), update the splitting variable `z` by a
//! projection, then ascend the dual `mu`. They differ only in what gets
//! projected:
//!
//! * [`solve_hard`] uses the exact box projection;
//! * [`solve_soft_augmented`] runs the hard loop on the slack-augmented
//!   problem (variables `[x; xi]`, factoring an (n+p)-sized system);
//! * [`solve_soft_smoothed`] keeps the n-sized system and swaps in the
//!   smoothed projection, recovering slacks in closed form at exit.
//!
//! The per-iteration pieces (`x_update`, the projections, `dual_update`,
//! `residuals`, `update_rho`, and the `step_*` drivers) are public so tests
//! can replay the exact iteration path against reference oracles.

use crate::linalg::{
    add_scaled_sym, gram, DenseMatrix, DenseVector, LinalgError, SpdFactorization,
};
use crate::problem::{augment, objective_soft, recover_slack, QpProblem, SoftQpProblem};
use std::time::{Duration, Instant};
use thiserror::Error;

/// Residual norms are floored at this value before forming the ratio that
/// drives step-size adaptation, so a vanishing residual cannot divide by zero.
pub const RESIDUAL_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("invalid solver settings: {reason}")]
    InvalidSettings { reason: String },
    #[error(
        "cannot factor Q + rho*A'A (pivot {pivot} is not positive); \
         the problem violates the positive-definiteness requirement — \
         regularize Q by adding a small multiple of the identity to its diagonal"
    )]
    NotPositiveDefinite { pivot: usize },
    #[error(
        "cannot factor the slack-augmented system (pivot {pivot} is not positive) \
         with alpha = {alpha}; increasing alpha strengthens the slack block and \
         can restore positive definiteness"
    )]
    AugmentedNotPositiveDefinite { pivot: usize, alpha: f64 },
}

fn factor_error(e: LinalgError) -> SolverError {
    match e {
        LinalgError::NotPositiveDefinite { pivot } => SolverError::NotPositiveDefinite { pivot },
        other => unreachable!("problem shapes are validated at construction: {other}"),
    }
}

/// Tunable knobs of the ADMM loop.
///
/// `adaptive_rho` and `log_iterates` extend the core parameter set: the first
/// freezes the step size (needed for iterate-equivalence studies), the second
/// records per-iteration residual norms for convergence curves. Both default
/// to the production behavior (adaptation on, logging off).
#[derive(Debug, Clone, PartialEq)]
pub struct SolverSettings {
    /// Initial step size rho.
    pub rho0: f64,
    /// Exit tolerance on max(prim_norm, dual_norm).
    pub eps: f64,
    /// Residual-ratio threshold: rho changes only when the square-root ratio
    /// exceeds kappa in either direction.
    pub kappa: f64,
    /// Step-size update period in iterations.
    pub n_rho: usize,
    /// Iteration cap.
    pub max_iter: usize,
    /// Lower clamp for adapted rho values.
    pub rho_min: f64,
    /// Upper clamp for adapted rho values.
    pub rho_max: f64,
    /// When false, rho stays at `rho0` for the whole run.
    pub adaptive_rho: bool,
    /// When true, the report carries one `IterateRecord` per iteration.
    pub log_iterates: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            rho0: 0.1,
            eps: 1e-6,
            kappa: 5.0,
            n_rho: 25,
            max_iter: 20_000,
            rho_min: 1e-6,
            rho_max: 1e6,
            adaptive_rho: true,
            log_iterates: false,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<(), SolverError> {
        let fail = |reason: &str| {
            Err(SolverError::InvalidSettings {
                reason: reason.to_string(),
            })
        };
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return fail("eps must be a positive finite real");
        }
        if !(self.kappa > 1.0 && self.kappa.is_finite()) {
            return fail("kappa must exceed 1");
        }
        if self.n_rho == 0 {
            return fail("n_rho must be at least 1");
        }
        if self.max_iter == 0 {
            return fail("max_iter must be at least 1");
        }
        if !(self.rho_min > 0.0 && self.rho_max.is_finite() && self.rho_min <= self.rho_max) {
            return fail("rho bounds must satisfy 0 < rho_min <= rho_max < inf");
        }
        if !(self.rho0 >= self.rho_min && self.rho0 <= self.rho_max) {
            return fail("rho0 must lie within [rho_min, rho_max]");
        }
        Ok(())
    }
}

/// How a solve ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    /// `max(prim_norm, dual_norm) < eps` at the reported iterate.
    Converged,
    /// The iteration cap was reached first.
    MaxIterations,
}

/// One row of the optional per-iteration log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterateRecord {
    pub iter: usize,
    pub prim_norm: f64,
    pub dual_norm: f64,
    /// Step size in force during this iteration.
    pub rho: f64,
}

/// Primal and dual residual vectors with their infinity norms.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualPair {
    /// `Ax - z`.
    pub r_prim: DenseVector,
    /// `Qx + q + A'mu`.
    pub r_dual: DenseVector,
    pub prim_norm: f64,
    pub dual_norm: f64,
}

impl ResidualPair {
    pub fn new(r_prim: DenseVector, r_dual: DenseVector) -> Self {
        let prim_norm = r_prim.inf_norm();
        let dual_norm = r_dual.inf_norm();
        Self {
            r_prim,
            r_dual,
            prim_norm,
            dual_norm,
        }
    }

    /// The quantity compared against `eps` at exit.
    pub fn max_norm(&self) -> f64 {
        self.prim_norm.max(self.dual_norm)
    }
}

/// Everything a solve returns.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub x: DenseVector,
    /// Recovered slack, present for the soft variants only.
    pub xi: Option<DenseVector>,
    pub z: DenseVector,
    pub mu: DenseVector,
    /// Soft objective for soft variants, hard objective otherwise.
    pub objective: f64,
    pub residuals: ResidualPair,
    pub iterations: usize,
    pub status: SolveStatus,
    pub wall_time: Duration,
    pub iterate_log: Option<Vec<IterateRecord>>,
}

/// Row-compressed copy of a matrix for the per-iteration products.
///
/// The solver's working matrices (stacked MPC constraint blocks,
/// block-diagonal costs) are mostly zeros; multiplying through stored zeros
/// would dominate iteration cost for no benefit. The factorization and the
/// triangular solves stay fully dense — only the matrix–vector products use
/// the pattern. Results agree with the dense kernels up to floating-point
/// summation order.
#[derive(Debug, Clone)]
struct SparsePattern {
    rows: usize,
    cols: usize,
    entries: Vec<Vec<(usize, f64)>>,
}

impl SparsePattern {
    fn from_matrix(m: &DenseMatrix) -> Self {
        let entries = (0..m.rows())
            .map(|i| {
                m.row(i)
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(j, &v)| (j, v))
                    .collect()
            })
            .collect();
        Self {
            rows: m.rows(),
            cols: m.cols(),
            entries,
        }
    }

    fn matvec(&self, v: &DenseVector) -> DenseVector {
        assert_eq!(v.len(), self.cols, "pattern matvec: dimension mismatch");
        let mut out = vec![0.0; self.rows];
        for (o, row) in out.iter_mut().zip(&self.entries) {
            let mut acc = 0.0;
            for &(j, a) in row {
                acc += a * v[j];
            }
            *o = acc;
        }
        DenseVector::from_raw(out)
    }

    fn transpose_matvec(&self, v: &DenseVector) -> DenseVector {
        assert_eq!(
            v.len(),
            self.rows,
            "pattern transpose_matvec: dimension mismatch"
        );
        let mut out = vec![0.0; self.cols];
        for (row, &w) in self.entries.iter().zip(v.iter()) {
            if w == 0.0 {
                continue;
            }
            for &(j, a) in row {
                out[j] += a * w;
            }
        }
        DenseVector::from_raw(out)
    }
}

/// Mutable state of one ADMM run.
///
/// `x`, `z`, `mu`, and `iter` are public so reference loops can be driven
/// step by step; the step size and its matching factorization stay coupled
/// behind [`SolverState::rho`] and [`SolverState::set_rho`].
#[derive(Debug, Clone)]
pub struct SolverState {
    pub x: DenseVector,
    pub z: DenseVector,
    pub mu: DenseVector,
    pub iter: usize,
    rho: f64,
    /// Factorization of `Q + rho * gram`.
    factorization: SpdFactorization,
    /// Cached `A'A`, reused on every refactorization.
    gram: DenseMatrix,
    /// Compressed constraint matrix for the iteration products.
    a_pattern: SparsePattern,
    /// Compressed Hessian for the dual-residual product.
    q_pattern: SparsePattern,
}

impl SolverState {
    /// Builds the zero-initialized state and factors the x-update matrix.
    pub fn new(prob: &QpProblem, rho: f64) -> Result<Self, SolverError> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(SolverError::InvalidSettings {
                reason: "rho must be a positive finite real".to_string(),
            });
        }
        let gram = gram(prob.constraints());
        let factorization = SpdFactorization::factor(&add_scaled_sym(prob.hessian(), &gram, rho))
            .map_err(factor_error)?;
        Ok(Self {
            x: DenseVector::zeros(prob.num_vars()),
            z: DenseVector::zeros(prob.num_constraints()),
            mu: DenseVector::zeros(prob.num_constraints()),
            iter: 0,
            rho,
            factorization,
            gram,
            a_pattern: SparsePattern::from_matrix(prob.constraints()),
            q_pattern: SparsePattern::from_matrix(prob.hessian()),
        })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Changes the step size and refactorizes the x-update matrix so the
    /// two never drift apart.
    pub fn set_rho(&mut self, prob: &QpProblem, rho: f64) -> Result<(), SolverError> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(SolverError::InvalidSettings {
                reason: "rho must be a positive finite real".to_string(),
            });
        }
        self.factorization =
            SpdFactorization::factor(&add_scaled_sym(prob.hessian(), &self.gram, rho))
                .map_err(factor_error)?;
        self.rho = rho;
        Ok(())
    }
}

/// Minimizes the augmented Lagrangian over `x` with `(z, mu)` fixed:
/// solves `(Q + rho A'A) x = -q - A'mu + rho A'z` with the cached
/// factorization. Factorization failures surface when the state is built
/// or the step size changes, never here.
pub fn x_update(state: &SolverState, prob: &QpProblem) -> DenseVector {
    let p = prob.num_constraints();
    let mut w = Vec::with_capacity(p);
    for i in 0..p {
        w.push(state.rho * state.z[i] - state.mu[i]);
    }
    let atw = state.a_pattern.transpose_matvec(&DenseVector::from_raw(w));
    let mut rhs = Vec::with_capacity(prob.num_vars());
    for i in 0..prob.num_vars() {
        rhs.push(atw[i] - prob.linear()[i]);
    }
    state
        .factorization
        .solve(&DenseVector::from_raw(rhs))
        .expect("state dimensions match the problem by construction")
}

/// Elementwise projection onto the box `[lower, upper]`; infinite bounds
/// never clamp. A point already inside (boundary included) is unchanged.
pub fn project_hard(ztilde: &DenseVector, lower: &DenseVector, upper: &DenseVector) -> DenseVector {
    assert!(
        ztilde.len() == lower.len() && ztilde.len() == upper.len(),
        "project_hard: dimension mismatch"
    );
    let out = ztilde
        .iter()
        .zip(lower.iter())
        .zip(upper.iter())
        .map(|((&v, &l), &u)| v.max(l).min(u))
        .collect();
    DenseVector::from_raw(out)
}

/// Smoothed box projection: the interior (boundary included) maps to
/// itself, while a point beyond a finite bound moves only part of the way
/// back, to `(rho*v + alpha*bound) / (rho + alpha)`.
pub fn project_smoothed(
    ztilde: &DenseVector,
    lower: &DenseVector,
    upper: &DenseVector,
    rho: f64,
    alpha: f64,
) -> DenseVector {
    assert!(
        ztilde.len() == lower.len() && ztilde.len() == upper.len(),
        "project_smoothed: dimension mismatch"
    );
    assert!(
        rho > 0.0 && alpha > 0.0,
        "project_smoothed: rho and alpha must be positive"
    );
    let denom = rho + alpha;
    let out = ztilde
        .iter()
        .zip(lower.iter())
        .zip(upper.iter())
        .map(|((&v, &l), &u)| {
            if v < l {
                (rho * v + alpha * l) / denom
            } else if v > u {
                (rho * v + alpha * u) / denom
            } else {
                v
            }
        })
        .collect();
    DenseVector::from_raw(out)
}

/// Dual ascent `mu + rho * (Ax - z)`.
pub fn dual_update(mu: &DenseVector, x_a: &DenseVector, z: &DenseVector, rho: f64) -> DenseVector {
    assert!(
        mu.len() == x_a.len() && mu.len() == z.len(),
        "dual_update: dimension mismatch"
    );
    let out = mu
        .iter()
        .zip(x_a.iter())
        .zip(z.iter())
        .map(|((&m, &ax), &zv)| m + rho * (ax - zv))
        .collect();
    DenseVector::from_raw(out)
}

/// Primal residual `Ax - z` and dual residual `Qx + q + A'mu`, with their
/// infinity norms.
pub fn residuals(
    prob: &QpProblem,
    x: &DenseVector,
    z: &DenseVector,
    mu: &DenseVector,
) -> ResidualPair {
    let ax = prob.constraints().matvec(x);
    let r_prim = DenseVector::from_raw(ax.iter().zip(z.iter()).map(|(&a, &zv)| a - zv).collect());
    let qx = prob.hessian().matvec(x);
    let atmu = prob.constraints().transpose_matvec(mu);
    let r_dual = DenseVector::from_raw(
        (0..prob.num_vars())
            .map(|i| qx[i] + prob.linear()[i] + atmu[i])
            .collect(),
    );
    ResidualPair::new(r_prim, r_dual)
}

/// Residual-balancing step-size rule: with both norms floored at
/// [`RESIDUAL_FLOOR`], let `ratio = sqrt(prim/dual)`. If `ratio` exceeds
/// `kappa` in either direction, return `rho * ratio` clamped to
/// `[rho_min, rho_max]`; otherwise return `rho` unchanged.
pub fn update_rho(rho: f64, res: &ResidualPair, settings: &SolverSettings) -> f64 {
    let prim = res.prim_norm.max(RESIDUAL_FLOOR);
    let dual = res.dual_norm.max(RESIDUAL_FLOOR);
    let ratio = (prim / dual).sqrt();
    if ratio > settings.kappa || 1.0 / ratio > settings.kappa {
        (rho * ratio).clamp(settings.rho_min, settings.rho_max)
    } else {
        rho
    }
}

fn ztilde(ax: &DenseVector, mu: &DenseVector, rho: f64) -> DenseVector {
    DenseVector::from_raw(
        ax.iter()
            .zip(mu.iter())
            .map(|(&a, &m)| a + m / rho)
            .collect(),
    )
}

/// [`residuals`] with `Ax` already in hand and the state's compressed
/// matrices doing the products.
fn residuals_cached(state: &SolverState, prob: &QpProblem, ax: &DenseVector) -> ResidualPair {
    let r_prim = DenseVector::from_raw(
        ax.iter()
            .zip(state.z.iter())
            .map(|(&a, &zv)| a - zv)
            .collect(),
    );
    let qx = state.q_pattern.matvec(&state.x);
    let atmu = state.a_pattern.transpose_matvec(&state.mu);
    let r_dual = DenseVector::from_raw(
        (0..prob.num_vars())
            .map(|i| qx[i] + prob.linear()[i] + atmu[i])
            .collect(),
    );
    ResidualPair::new(r_prim, r_dual)
}

/// One hard-projection ADMM iteration; returns the post-step residuals.
pub fn step_hard(state: &mut SolverState, prob: &QpProblem) -> ResidualPair {
    state.x = x_update(state, prob);
    let ax = state.a_pattern.matvec(&state.x);
    let zt = ztilde(&ax, &state.mu, state.rho);
    state.z = project_hard(&zt, prob.lower(), prob.upper());
    state.mu = dual_update(&state.mu, &ax, &state.z, state.rho);
    state.iter += 1;
    residuals_cached(state, prob, &ax)
}

/// One smoothed-projection ADMM iteration; identical to [`step_hard`]
/// except for the z-update.
pub fn step_smoothed(state: &mut SolverState, prob: &QpProblem, alpha: f64) -> ResidualPair {
    state.x = x_update(state, prob);
    let ax = state.a_pattern.matvec(&state.x);
    let zt = ztilde(&ax, &state.mu, state.rho);
    state.z = project_smoothed(&zt, prob.lower(), prob.upper(), state.rho, alpha);
    state.mu = dual_update(&state.mu, &ax, &state.z, state.rho);
    state.iter += 1;
    residuals_cached(state, prob, &ax)
}

enum ZUpdate {
    Hard,
    Smoothed { alpha: f64 },
}

struct RawSolve {
    x: DenseVector,
    z: DenseVector,
    mu: DenseVector,
    /// `mu` entering the final iteration, i.e. the multiplier that produced
    /// the final `z`; slack recovery must use this one so `z + xi` lands on
    /// the bound.
    mu_prev: DenseVector,
    rho: f64,
    residuals: ResidualPair,
    iterations: usize,
    status: SolveStatus,
    wall_time: Duration,
    iterate_log: Option<Vec<IterateRecord>>,
}

fn run_admm(
    prob: &QpProblem,
    settings: &SolverSettings,
    zmode: ZUpdate,
) -> Result<RawSolve, SolverError> {
    let started = Instant::now();
    settings.validate()?;
    let mut state = SolverState::new(prob, settings.rho0)?;
    let mut log: Option<Vec<IterateRecord>> = settings.log_iterates.then(Vec::new);
    let mut mu_prev = state.mu.clone();
    loop {
        mu_prev.clone_from(&state.mu);
        let res = match zmode {
            ZUpdate::Hard => step_hard(&mut state, prob),
            ZUpdate::Smoothed { alpha } => step_smoothed(&mut state, prob, alpha),
        };
        if let Some(records) = &mut log {
            records.push(IterateRecord {
                iter: state.iter,
                prim_norm: res.prim_norm,
                dual_norm: res.dual_norm,
                rho: state.rho(),
            });
        }
        let converged = res.max_norm() < settings.eps;
        if converged || state.iter >= settings.max_iter {
            return Ok(RawSolve {
                x: state.x,
                z: state.z,
                mu: state.mu,
                mu_prev,
                rho: state.rho,
                residuals: res,
                iterations: state.iter,
                status: if converged {
                    SolveStatus::Converged
                } else {
                    SolveStatus::MaxIterations
                },
                wall_time: started.elapsed(),
                iterate_log: log,
            });
        }
        if settings.adaptive_rho && state.iter % settings.n_rho == 0 {
            let new_rho = update_rho(state.rho(), &res, settings);
            if new_rho != state.rho() {
                state.set_rho(prob, new_rho)?;
            }
        }
    }
}

/// Solves the hard-constrained QP by projection ADMM.
pub fn solve_hard(prob: &QpProblem, settings: &SolverSettings) -> Result<SolveReport, SolverError> {
    let raw = run_admm(prob, settings, ZUpdate::Hard)?;
    Ok(SolveReport {
        objective: prob.objective(&raw.x),
        x: raw.x,
        xi: None,
        z: raw.z,
        mu: raw.mu,
        residuals: raw.residuals,
        iterations: raw.iterations,
        status: raw.status,
        wall_time: raw.wall_time,
        iterate_log: raw.iterate_log,
    })
}

/// Solves the soft QP by running hard ADMM on the slack-augmented
/// reformulation: variables `[x; xi]`, constraint matrix `[A I]`. The
/// factored system is (n+p)-dimensional; that size difference is exactly
/// what the smoothed variant avoids.
pub fn solve_soft_augmented(
    prob: &SoftQpProblem,
    settings: &SolverSettings,
) -> Result<SolveReport, SolverError> {
    let aug = augment(prob);
    let raw = run_admm(aug.qp(), settings, ZUpdate::Hard).map_err(|e| match e {
        SolverError::NotPositiveDefinite { pivot } => SolverError::AugmentedNotPositiveDefinite {
            pivot,
            alpha: prob.alpha(),
        },
        other => other,
    })?;
    let (x, xi) = aug.split(&raw.x);
    Ok(SolveReport {
        objective: objective_soft(&x, &xi, prob),
        x,
        xi: Some(xi),
        z: raw.z,
        mu: raw.mu,
        residuals: raw.residuals,
        iterations: raw.iterations,
        status: raw.status,
        wall_time: raw.wall_time,
        iterate_log: raw.iterate_log,
    })
}

/// Solves the soft QP without ever forming the augmented system: the same
/// n-dimensional loop as [`solve_hard`] with the smoothed projection as the
/// z-update, plus a closed-form slack recovery at exit.
pub fn solve_soft_smoothed(
    prob: &SoftQpProblem,
    settings: &SolverSettings,
) -> Result<SolveReport, SolverError> {
    let raw = run_admm(
        prob.base(),
        settings,
        ZUpdate::Smoothed {
            alpha: prob.alpha(),
        },
    )?;
    let xi = recover_slack(&raw.x, &raw.mu_prev, raw.rho, prob);
    Ok(SolveReport {
        objective: objective_soft(&raw.x, &xi, prob),
        x: raw.x,
        xi: Some(xi),
        z: raw.z,
        mu: raw.mu,
        residuals: raw.residuals,
        iterations: raw.iterations,
        status: raw.status,
        wall_time: raw.wall_time,
        iterate_log: raw.iterate_log,
    })
}
