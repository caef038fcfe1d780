//! Brute-force reference solvers, used only to certify the fast paths.
//!
//! Two independent algorithms live here:
//!
//! * [`solve_zxi_coordinate`] solves the per-coordinate `(z, xi)` subproblem
//!   by enumerating KKT activity cases and solving each stationarity system
//!   numerically. It deliberately does **not** share code with the solver's
//!   smoothed projection — it is the thing that certifies it.
//! * [`solve_qp_active_set`] solves desk-size QPs by enumerating all `3^p`
//!   assignments of rows to {Free, Lower, Upper} and solving each
//!   equality-constrained KKT system with a pivoted LU.
//!
//! Both are exact (up to linear-solve roundoff) and slow; neither is meant
//! for anything beyond tests and the `verify` command.

use crate::linalg::DenseVector;
use crate::problem::{augment, QpProblem, SoftQpProblem};
use thiserror::Error;

/// Multiplier sign slack: boundary multipliers down to `-1e-10` count as
/// valid (degeneracy tolerance that cannot change the argmin).
pub const MULTIPLIER_TOL: f64 = 1e-10;

/// Primal feasibility slack for accepting enumeration candidates.
pub const FEASIBILITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    /// No activity assignment produced a feasible KKT point: the hard QP has
    /// an empty feasible set (soft QPs never hit this).
    #[error("the problem is infeasible: no active-set candidate satisfies the KKT conditions")]
    Infeasible,
}

/// Which side of the box binds a coordinate at the optimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activity {
    Lower,
    Upper,
    Inactive,
}

/// Solution of the scalar `(z, xi)` subproblem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZXiSolution {
    pub z: f64,
    pub xi: f64,
    pub active: Activity,
}

/// Solves a 2x2 linear system by Gaussian elimination with partial
/// pivoting. Small and boring on purpose: this is the oracle's own
/// arithmetic route, independent of any closed-form expression.
fn solve2(m: [[f64; 2]; 2], b: [f64; 2]) -> (f64, f64) {
    let (r0, r1) = if m[0][0].abs() >= m[1][0].abs() {
        (0, 1)
    } else {
        (1, 0)
    };
    let pivot = m[r0][0];
    debug_assert!(
        pivot != 0.0,
        "zxi stationarity system is never singular for rho, alpha > 0"
    );
    let f = m[r1][0] / pivot;
    let a22 = m[r1][1] - f * m[r0][1];
    let b2 = b[r1] - f * b[r0];
    let y = b2 / a22;
    let x = (b[r0] - m[r0][1] * y) / pivot;
    (x, y)
}

/// Solves `min_(z,xi) (alpha/2) xi² + (rho/2)(z - a - mu/rho)²` subject to
/// `l <= z + xi <= u` by KKT case enumeration.
///
/// Cases are tried in the fixed order Inactive, Lower, Upper; the first one
/// whose KKT conditions hold is returned (the subproblem is strictly convex,
/// so any two valid cases coincide numerically). An exact boundary hit
/// (`a + mu/rho == l` or `== u`) therefore classifies as Inactive.
pub fn solve_zxi_coordinate(
    a: f64,
    mu_i: f64,
    rho: f64,
    alpha: f64,
    l_i: f64,
    u_i: f64,
) -> ZXiSolution {
    assert!(
        rho > 0.0 && alpha > 0.0,
        "solve_zxi_coordinate: rho and alpha must be positive"
    );
    assert!(l_i <= u_i, "solve_zxi_coordinate: crossed bounds");
    let target = rho * a + mu_i; // right-hand side of the z-stationarity row

    // Inactive: nu = 0, xi = 0, rho*z = rho*a + mu.
    let z_free = target / rho;
    if l_i <= z_free && z_free <= u_i {
        return ZXiSolution {
            z: z_free,
            xi: 0.0,
            active: Activity::Inactive,
        };
    }

    // Active at bound b: eliminate the multiplier nu = alpha*xi from
    //   rho*z - nu = rho*a + mu
    //   alpha*xi - nu = 0        (lower side; upper flips nu's sign)
    //   z + xi = b
    // giving the 2x2 system [[rho, -alpha], [1, 1]] (z, xi) = (target, b).
    let system = [[rho, -alpha], [1.0, 1.0]];

    if l_i == u_i {
        // Equality row: single merged case, multiplier sign free.
        let (z, xi) = solve2(system, [target, l_i]);
        let active = if xi > 0.0 {
            Activity::Lower
        } else {
            Activity::Upper
        };
        return ZXiSolution { z, xi, active };
    }

    if l_i.is_finite() {
        let (z, xi) = solve2(system, [target, l_i]);
        // nu_lower = alpha*xi must be >= -MULTIPLIER_TOL.
        if alpha * xi >= -MULTIPLIER_TOL {
            return ZXiSolution {
                z,
                xi,
                active: Activity::Lower,
            };
        }
    }
    if u_i.is_finite() {
        let (z, xi) = solve2(system, [target, u_i]);
        // nu_upper = -alpha*xi must be >= -MULTIPLIER_TOL.
        if -alpha * xi >= -MULTIPLIER_TOL {
            return ZXiSolution {
                z,
                xi,
                active: Activity::Upper,
            };
        }
    }
    unreachable!("one of the three KKT cases always holds for a strictly convex subproblem")
}

/// Per-row activity in an [`ActiveSetSolution`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowStatus {
    Free,
    Lower,
    Upper,
}

/// A KKT point returned by the enumeration oracle.
///
/// `multipliers` are signed: stationarity reads `Qx + q + Aᵀλ = 0`, so a
/// binding lower bound carries `λ <= 0` and a binding upper bound `λ >= 0`;
/// free rows carry exactly 0. For equality rows (`l == u`) the sign is free
/// and the row is reported as `Lower`.
#[derive(Debug, Clone, PartialEq)]
pub struct ActiveSetSolution {
    pub x: DenseVector,
    pub multipliers: DenseVector,
    pub active_set: Vec<RowStatus>,
    pub objective: f64,
}

/// Dense LU solve with partial pivoting for the little KKT systems.
/// Returns `None` when the matrix is numerically singular (that candidate
/// active set is skipped).
fn lu_solve(mut m: Vec<f64>, dim: usize, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let scale = m.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let tol = 1e-12 * scale.max(1e-300);
    for col in 0..dim {
        let pivot_row = (col..dim)
            .max_by(|&r, &s| m[r * dim + col].abs().total_cmp(&m[s * dim + col].abs()))
            .expect("nonempty range");
        if m[pivot_row * dim + col].abs() <= tol {
            return None;
        }
        if pivot_row != col {
            for j in 0..dim {
                m.swap(col * dim + j, pivot_row * dim + j);
            }
            b.swap(col, pivot_row);
        }
        let pivot = m[col * dim + col];
        for r in (col + 1)..dim {
            let f = m[r * dim + col] / pivot;
            if f == 0.0 {
                continue;
            }
            m[r * dim + col] = 0.0;
            for j in (col + 1)..dim {
                m[r * dim + j] -= f * m[col * dim + j];
            }
            b[r] -= f * b[col];
        }
    }
    for col in (0..dim).rev() {
        let mut v = b[col];
        for j in (col + 1)..dim {
            v -= m[col * dim + j] * b[j];
        }
        b[col] = v / m[col * dim + col];
    }
    Some(b)
}

/// Candidate statuses a row can take during enumeration, in tie-break order.
fn candidate_statuses(l: f64, u: f64) -> Vec<RowStatus> {
    if l == u {
        // Equality row: always active, multiplier sign free; merged case.
        return vec![RowStatus::Lower];
    }
    let mut c = vec![RowStatus::Free];
    if l.is_finite() {
        c.push(RowStatus::Lower);
    }
    if u.is_finite() {
        c.push(RowStatus::Upper);
    }
    c
}

/// Solves a small QP exactly by enumerating every assignment of rows to
/// {Free, Lower, Upper}.
///
/// For each assignment the equality-constrained KKT system
///
/// ```text
/// [ Q      A_actᵀ ] [x]       [-q   ]
/// [ A_act  0      ] [λ_act] = [b_act]
/// ```
///
/// is solved; candidates failing primal feasibility or multiplier signs are
/// discarded and the feasible candidate with the least objective wins (ties
/// go to the first enumerated, with the last row cycling fastest). Intended
/// for `n <= 10`, `p <= 8` only.
pub fn solve_qp_active_set(prob: &QpProblem) -> Result<ActiveSetSolution, OracleError> {
    let n = prob.num_vars();
    let p = prob.num_constraints();
    assert!(
        n <= 10 && p <= 8,
        "active-set oracle is for desk-size problems only"
    );

    let row_candidates: Vec<Vec<RowStatus>> = (0..p)
        .map(|i| candidate_statuses(prob.lower()[i], prob.upper()[i]))
        .collect();

    let mut best: Option<ActiveSetSolution> = None;
    let mut odometer = vec![0usize; p];
    loop {
        let assignment: Vec<RowStatus> = (0..p).map(|i| row_candidates[i][odometer[i]]).collect();
        if let Some(candidate) = try_assignment(prob, &assignment) {
            let better = match &best {
                None => true,
                Some(b) => candidate.objective < b.objective,
            };
            if better {
                best = Some(candidate);
            }
        }
        // Advance the odometer, last row fastest.
        let mut pos = p;
        loop {
            if pos == 0 {
                return best.ok_or(OracleError::Infeasible);
            }
            pos -= 1;
            odometer[pos] += 1;
            if odometer[pos] < row_candidates[pos].len() {
                break;
            }
            odometer[pos] = 0;
        }
    }
}

fn try_assignment(prob: &QpProblem, assignment: &[RowStatus]) -> Option<ActiveSetSolution> {
    let n = prob.num_vars();
    let p = prob.num_constraints();
    let active: Vec<usize> = (0..p)
        .filter(|&i| assignment[i] != RowStatus::Free)
        .collect();
    let m = active.len();
    let dim = n + m;

    let mut kkt = vec![0.0; dim * dim];
    let mut rhs = vec![0.0; dim];
    for i in 0..n {
        for j in 0..n {
            kkt[i * dim + j] = prob.hessian().get(i, j);
        }
        rhs[i] = -prob.linear()[i];
    }
    for (k, &row) in active.iter().enumerate() {
        for j in 0..n {
            let v = prob.constraints().get(row, j);
            kkt[(n + k) * dim + j] = v;
            kkt[j * dim + (n + k)] = v;
        }
        rhs[n + k] = match assignment[row] {
            RowStatus::Lower => prob.lower()[row],
            RowStatus::Upper => prob.upper()[row],
            RowStatus::Free => unreachable!(),
        };
    }

    let sol = lu_solve(kkt, dim, rhs)?;
    let x = DenseVector::from_raw(sol[..n].to_vec());
    let ax = prob.constraints().matvec(&x);

    let mut multipliers = vec![0.0; p];
    for (k, &row) in active.iter().enumerate() {
        multipliers[row] = sol[n + k];
    }

    for i in 0..p {
        let (l, u) = (prob.lower()[i], prob.upper()[i]);
        match assignment[i] {
            RowStatus::Free => {
                if !(ax[i] >= l - FEASIBILITY_TOL && ax[i] <= u + FEASIBILITY_TOL) {
                    return None;
                }
            }
            // Signed convention: Qx + q + A'lambda = 0, so a lower bound
            // pushes with lambda <= 0 and an upper bound with lambda >= 0.
            // Equality rows (enumerated as Lower) have free sign.
            RowStatus::Lower => {
                if l != u && multipliers[i] > MULTIPLIER_TOL {
                    return None;
                }
            }
            RowStatus::Upper => {
                if multipliers[i] < -MULTIPLIER_TOL {
                    return None;
                }
            }
        }
    }

    Some(ActiveSetSolution {
        objective: prob.objective(&x),
        x,
        multipliers: DenseVector::from_raw(multipliers),
        active_set: assignment.to_vec(),
    })
}

/// Reference solution of a soft QP: the active-set oracle applied to the
/// slack-augmented reformulation. The returned `x` lives in the augmented
/// space `[x; xi]`; split it at `prob.base().num_vars()`.
pub fn solve_soft_qp_reference(prob: &SoftQpProblem) -> Result<ActiveSetSolution, OracleError> {
    solve_qp_active_set(augment(prob).qp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn zxi_upper_violation_known_values() {
        // a=2, mu=0, rho=1, alpha=1, l=0, u=1 -> z=1.5, xi=-0.5, Upper
        // (independently confirmed by an interior-point solve).
        let s = solve_zxi_coordinate(2.0, 0.0, 1.0, 1.0, 0.0, 1.0);
        assert!(close(s.z, 1.5, 1e-12));
        assert!(close(s.xi, -0.5, 1e-12));
        assert_eq!(s.active, Activity::Upper);
    }

    #[test]
    fn zxi_interior_is_identity() {
        let s = solve_zxi_coordinate(0.5, 0.0, 1.0, 1.0, 0.0, 1.0);
        assert_eq!(s.z, 0.5);
        assert_eq!(s.xi, 0.0);
        assert_eq!(s.active, Activity::Inactive);
    }

    #[test]
    fn zxi_equality_row_known_values() {
        // l=u=0, a=1, mu=0, rho=1, alpha=1 -> z=0.5, xi=-0.5.
        let s = solve_zxi_coordinate(1.0, 0.0, 1.0, 1.0, 0.0, 0.0);
        assert!(close(s.z, 0.5, 1e-12));
        assert!(close(s.xi, -0.5, 1e-12));
        assert_eq!(s.active, Activity::Upper);
    }

    #[test]
    fn zxi_one_sided_bound_known_values() {
        // l=-inf, u=1, a=3, mu=1, rho=2, alpha=3 -> z=2, xi=-1
        // (independently confirmed by an interior-point solve).
        let s = solve_zxi_coordinate(3.0, 1.0, 2.0, 3.0, f64::NEG_INFINITY, 1.0);
        assert!(close(s.z, 2.0, 1e-12));
        assert!(close(s.xi, -1.0, 1e-12));
        assert_eq!(s.active, Activity::Upper);
    }

    #[test]
    fn zxi_exact_boundary_hit_is_inactive() {
        let s = solve_zxi_coordinate(1.0, 0.0, 2.0, 5.0, 1.0, 2.0);
        assert_eq!(s.z, 1.0);
        assert_eq!(s.xi, 0.0);
        assert_eq!(s.active, Activity::Inactive);
    }

    #[test]
    fn zxi_free_row_is_always_inactive() {
        let s = solve_zxi_coordinate(7.5, -2.0, 0.5, 9.0, f64::NEG_INFINITY, f64::INFINITY);
        assert_eq!(s.active, Activity::Inactive);
        assert!(close(s.z, 7.5 + (-2.0) / 0.5, 1e-12));
    }

    #[test]
    fn zxi_mu_shifts_the_target() {
        // zt = a + mu/rho = 0 + 4/2 = 2 > u = 1; xi = rho/(rho+alpha)(u-zt) = -0.5.
        let s = solve_zxi_coordinate(0.0, 4.0, 2.0, 2.0, 0.0, 1.0);
        assert!(close(s.xi, -0.5, 1e-12));
        assert!(close(s.z + s.xi, 1.0, 1e-12));
    }

    #[test]
    fn zxi_solution_stays_in_the_box() {
        // Spot check the z + xi in [l, u] invariant over a small grid.
        for &a in &[-3.0, -0.4, 0.0, 0.7, 2.5] {
            for &mu in &[-2.0, 0.0, 1.5] {
                for &(rho, alpha) in &[(0.5, 2.0), (1.0, 1.0), (10.0, 0.1)] {
                    for &(l, u) in &[(-1.0, 1.0), (0.0, 0.0), (f64::NEG_INFINITY, 0.5)] {
                        let s = solve_zxi_coordinate(a, mu, rho, alpha, l, u);
                        let t = s.z + s.xi;
                        assert!(
                            t >= l - 1e-12 && t <= u + 1e-12,
                            "z+xi={t} outside [{l},{u}] for a={a} mu={mu} rho={rho} alpha={alpha}"
                        );
                    }
                }
            }
        }
    }

    fn scalar_box(l: f64, u: f64) -> QpProblem {
        QpProblem::new(
            DenseMatrix::identity(1),
            DenseVector::zeros(1),
            DenseMatrix::identity(1),
            DenseVector::from_slice(&[l]).unwrap(),
            DenseVector::from_slice(&[u]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn active_set_scalar_box_known_values() {
        // min x²/2 s.t. 1 <= x <= 2 -> x=1 with signed multiplier -1 on the
        // lower bound (hand KKT: x + lambda = 0).
        let sol = solve_qp_active_set(&scalar_box(1.0, 2.0)).unwrap();
        assert!(close(sol.x[0], 1.0, 1e-12));
        assert!(close(sol.multipliers[0], -1.0, 1e-12));
        assert_eq!(sol.active_set, vec![RowStatus::Lower]);
        assert!(close(sol.objective, 0.5, 1e-12));
    }

    #[test]
    fn active_set_unconstrained_minimum() {
        let prob = QpProblem::new(
            DenseMatrix::identity(2),
            DenseVector::zeros(2),
            DenseMatrix::zeros(0, 2),
            DenseVector::zeros(0),
            DenseVector::zeros(0),
        )
        .unwrap();
        let sol = solve_qp_active_set(&prob).unwrap();
        assert_eq!(sol.x.as_slice(), &[0.0, 0.0]);
        assert_eq!(sol.objective, 0.0);
    }

    #[test]
    fn active_set_detects_infeasibility() {
        // x <= -1 and x >= 1 simultaneously.
        let prob = QpProblem::new(
            DenseMatrix::identity(1),
            DenseVector::zeros(1),
            DenseMatrix::new(2, 1, vec![1.0, 1.0]).unwrap(),
            DenseVector::from_slice(&[f64::NEG_INFINITY, 1.0]).unwrap(),
            DenseVector::from_slice(&[-1.0, f64::INFINITY]).unwrap(),
        )
        .unwrap();
        assert_eq!(solve_qp_active_set(&prob), Err(OracleError::Infeasible));
    }

    #[test]
    fn active_set_hyperplane_equality() {
        // min 0.5||x||² s.t. x1 + x2 = 2 -> (1, 1).
        let prob = QpProblem::new(
            DenseMatrix::identity(2),
            DenseVector::zeros(2),
            DenseMatrix::new(1, 2, vec![1.0, 1.0]).unwrap(),
            DenseVector::from_slice(&[2.0]).unwrap(),
            DenseVector::from_slice(&[2.0]).unwrap(),
        )
        .unwrap();
        let sol = solve_qp_active_set(&prob).unwrap();
        assert!(close(sol.x[0], 1.0, 1e-12));
        assert!(close(sol.x[1], 1.0, 1e-12));
    }

    #[test]
    fn active_set_solution_satisfies_kkt() {
        // Stationarity/complementarity self-check on a mixed problem.
        let prob = QpProblem::new(
            DenseMatrix::from_rows(&[&[2.0, 0.5], &[0.5, 1.0]]).unwrap(),
            DenseVector::from_slice(&[-1.0, 1.0]).unwrap(),
            DenseMatrix::from_rows(&[&[1.0, 0.0], &[1.0, 1.0], &[0.0, 1.0]]).unwrap(),
            DenseVector::from_slice(&[0.0, f64::NEG_INFINITY, -0.2]).unwrap(),
            DenseVector::from_slice(&[0.4, 0.5, f64::INFINITY]).unwrap(),
        )
        .unwrap();
        let sol = solve_qp_active_set(&prob).unwrap();
        // Stationarity: Qx + q + A'lambda = 0.
        let mut grad = prob.hessian().matvec(&sol.x);
        let atl = prob.constraints().transpose_matvec(&sol.multipliers);
        for i in 0..2 {
            let g = grad.as_slice()[i] + prob.linear()[i] + atl[i];
            assert!(g.abs() <= 1e-8, "stationarity residual {g}");
        }
        grad = prob.constraints().matvec(&sol.x);
        for i in 0..3 {
            assert!(grad[i] >= prob.lower()[i] - 1e-8 && grad[i] <= prob.upper()[i] + 1e-8);
            match sol.active_set[i] {
                RowStatus::Free => assert_eq!(sol.multipliers[i], 0.0),
                RowStatus::Lower => assert!(sol.multipliers[i] <= MULTIPLIER_TOL),
                RowStatus::Upper => assert!(sol.multipliers[i] >= -MULTIPLIER_TOL),
            }
        }
    }

    fn scalar_soft(alpha: f64, rows: &[(f64, f64)]) -> SoftQpProblem {
        let p = rows.len();
        SoftQpProblem::new(
            QpProblem::new(
                DenseMatrix::identity(1),
                DenseVector::zeros(1),
                DenseMatrix::new(p, 1, vec![1.0; p]).unwrap(),
                DenseVector::new(rows.iter().map(|r| r.0).collect()).unwrap(),
                DenseVector::new(rows.iter().map(|r| r.1).collect()).unwrap(),
            )
            .unwrap(),
            alpha,
        )
        .unwrap()
    }

    #[test]
    fn soft_reference_one_dimensional_example() {
        // min x²/2 + 5 xi² s.t. 1 <= x + xi <= 2 -> x = 10/11, xi = 1/11.
        let sol = solve_soft_qp_reference(&scalar_soft(10.0, &[(1.0, 2.0)])).unwrap();
        assert!(close(sol.x[0], 10.0 / 11.0, 1e-12));
        assert!(close(sol.x[1], 1.0 / 11.0, 1e-12));
        assert!(close(sol.objective, 5.0 / 11.0, 1e-12));
    }

    #[test]
    fn soft_reference_feasible_base_has_zero_slack() {
        // min x²/2 - x s.t. 0 <= x <= 2: hard optimum x=1 is interior, so
        // the soft solution keeps xi = 0 regardless of alpha.
        let base = QpProblem::new(
            DenseMatrix::identity(1),
            DenseVector::from_slice(&[-1.0]).unwrap(),
            DenseMatrix::identity(1),
            DenseVector::from_slice(&[0.0]).unwrap(),
            DenseVector::from_slice(&[2.0]).unwrap(),
        )
        .unwrap();
        let hard = solve_qp_active_set(&base).unwrap();
        for alpha in [0.1, 10.0, 1e4] {
            let soft = SoftQpProblem::new(base.clone(), alpha).unwrap();
            let sol = solve_soft_qp_reference(&soft).unwrap();
            assert!(close(sol.x[0], hard.x[0], 1e-10), "alpha={alpha}");
            assert!(close(sol.x[1], 0.0, 1e-10), "alpha={alpha}");
        }
    }

    #[test]
    fn soft_reference_contradictory_equalities() {
        // l=u=1 and l=u=2 on the same scalar: enumeration gives x=1 with
        // xi=(0,1) exactly (the first row needs no slack at the optimum).
        let sol = solve_soft_qp_reference(&scalar_soft(1.0, &[(1.0, 1.0), (2.0, 2.0)])).unwrap();
        assert!(close(sol.x[0], 1.0, 1e-12));
        assert!(close(sol.x[1], 0.0, 1e-12));
        assert!(close(sol.x[2], 1.0, 1e-12));

        // Pushing the rows further apart makes both slacks nonzero:
        // l=u=1 and l=u=3 -> x=4/3, xi=(-1/3, 5/3).
        let sol = solve_soft_qp_reference(&scalar_soft(1.0, &[(1.0, 1.0), (3.0, 3.0)])).unwrap();
        assert!(close(sol.x[0], 4.0 / 3.0, 1e-12));
        assert!(close(sol.x[1], -1.0 / 3.0, 1e-12));
        assert!(close(sol.x[2], 5.0 / 3.0, 1e-12));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            /// Coordinate-wise zxi solves equal the joint (z, xi) QP solved
            /// by the independent active-set oracle (separability).
            #[test]
            fn zxi_separability_three_coordinates(
                zt in proptest::collection::vec(-4.0f64..4.0, 3),
                rho in 0.2f64..5.0,
                alpha in 0.2f64..5.0,
                l in proptest::collection::vec(-2.0f64..0.0, 3),
                width in proptest::collection::vec(0.0f64..2.5, 3),
            ) {
                // Joint QP over (z, xi) in R^6:
                //   min (rho/2)||z - zt||² + (alpha/2)||xi||²  s.t. l <= z + xi <= u
                let mut hessian = DenseMatrix::zeros(6, 6);
                let mut linear = vec![0.0; 6];
                for i in 0..3 {
                    hessian.set(i, i, rho);
                    hessian.set(3 + i, 3 + i, alpha);
                    linear[i] = -rho * zt[i];
                }
                let mut cons = DenseMatrix::zeros(3, 6);
                for i in 0..3 {
                    cons.set(i, i, 1.0);
                    cons.set(i, 3 + i, 1.0);
                }
                let u: Vec<f64> = l.iter().zip(&width).map(|(a, w)| a + w).collect();
                let joint = QpProblem::new(
                    hessian,
                    DenseVector::new(linear).unwrap(),
                    cons,
                    DenseVector::new(l.clone()).unwrap(),
                    DenseVector::new(u.clone()).unwrap(),
                ).unwrap();
                let sol = solve_qp_active_set(&joint).unwrap();
                for i in 0..3 {
                    let c = solve_zxi_coordinate(zt[i], 0.0, rho, alpha, l[i], u[i]);
                    prop_assert!((sol.x[i] - c.z).abs() <= 1e-9, "z[{i}]");
                    prop_assert!((sol.x[3 + i] - c.xi).abs() <= 1e-9, "xi[{i}]");
                }
            }

            /// Oracle output always satisfies its own KKT certificate.
            #[test]
            fn active_set_kkt_certificate(
                qdiag in proptest::collection::vec(0.5f64..3.0, 2),
                lin in proptest::collection::vec(-2.0f64..2.0, 2),
                l0 in -2.0f64..0.0,
                w0 in 0.1f64..2.0,
            ) {
                let prob = QpProblem::new(
                    DenseMatrix::from_rows(&[&[qdiag[0], 0.2], &[0.2, qdiag[1]]]).unwrap(),
                    DenseVector::new(lin).unwrap(),
                    DenseMatrix::from_rows(&[&[1.0, 1.0], &[1.0, -1.0]]).unwrap(),
                    DenseVector::from_slice(&[l0, -3.0]).unwrap(),
                    DenseVector::from_slice(&[l0 + w0, 3.0]).unwrap(),
                ).unwrap();
                let sol = solve_qp_active_set(&prob).unwrap();
                let grad = prob.hessian().matvec(&sol.x);
                let atl = prob.constraints().transpose_matvec(&sol.multipliers);
                for i in 0..2 {
                    prop_assert!((grad[i] + prob.linear()[i] + atl[i]).abs() <= 1e-8);
                }
                let ax = prob.constraints().matvec(&sol.x);
                for i in 0..2 {
                    prop_assert!(ax[i] >= prob.lower()[i] - 1e-8);
                    prop_assert!(ax[i] <= prob.upper()[i] + 1e-8);
                }
            }
        }
    }
}
