//! Random MPC benchmark problems: generation and assembly into soft QPs.
//!
//! An instance is a finite-horizon optimal-control problem for a random
//! linear system with box constraints on states and controls. Every
//! constraint (dynamics, initial state, boxes) is softened with the single
//! slack weight `alpha`, so infeasible instances — initial state placed
//! outside the state box — remain solvable.
//!
//! Generation is a pure function of its arguments. The RNG is ChaCha8
//! seeded via `seed_from_u64`, normals come from a Box–Muller transform on
//! 53-bit uniforms, and the draw order is fixed (dynamics, input matrix,
//! cost diagonal, state box, control box, initial state), so instances
//! reproduce bit-for-bit across runs and platforms.

use crate::linalg::{DenseMatrix, DenseVector};
use crate::problem::{QpProblem, SoftQpProblem};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use std::fmt;

/// Whether the initial state starts inside or outside the state box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scenario {
    Feasible,
    Infeasible,
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scenario::Feasible => "feasible",
            Scenario::Infeasible => "infeasible",
        })
    }
}

/// One random MPC problem, prior to assembly.
#[derive(Debug, Clone, PartialEq)]
pub struct MpcInstance {
    /// State dimension `dim(x_k)`.
    pub nx: usize,
    /// Control dimension `dim(u_k)`.
    pub nu: usize,
    /// Horizon length N (states x_0..x_N, controls u_0..u_{N-1}).
    pub horizon: usize,
    /// State-transition matrix (nx × nx), scaled toward spectral radius 0.99.
    pub adyn: DenseMatrix,
    /// Input matrix (nx × nu).
    pub bdyn: DenseMatrix,
    /// State cost (nx × nx, diagonal PSD).
    pub qcost: DenseMatrix,
    /// Control cost (nu × nu, PD).
    pub rcost: DenseMatrix,
    pub x_lower: DenseVector,
    pub x_upper: DenseVector,
    pub u_lower: DenseVector,
    pub u_upper: DenseVector,
    /// Initial state x_s.
    pub x_init: DenseVector,
    /// Slack weight applied to every assembled constraint row.
    pub alpha: f64,
    pub seed: u64,
}

/// 53-bit uniform in [0, 1).
fn unit(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + unit(rng) * (hi - lo)
}

/// Standard normal via Box–Muller; `1 - u` keeps the logarithm finite.
fn normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1 = unit(rng);
    let u2 = unit(rng);
    (-2.0 * (1.0 - u1).ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Spectral-radius estimate by 100 steps of power iteration from the
/// normalized all-ones vector. For matrices whose dominant eigenvalues form
/// a complex pair this is an estimate, not the exact radius; determinism of
/// the scaling is the contract, exactness is not.
pub fn spectral_estimate(m: &DenseMatrix) -> f64 {
    assert_eq!(
        m.rows(),
        m.cols(),
        "spectral_estimate: square matrices only"
    );
    let n = m.rows();
    if n == 0 {
        return 0.0;
    }
    let mut v = DenseVector::from_slice(&vec![1.0 / (n as f64).sqrt(); n]).unwrap();
    let mut lambda = 0.0;
    for _ in 0..100 {
        let w = m.matvec(&v);
        lambda = w.two_norm();
        if lambda == 0.0 {
            return 0.0;
        }
        let inv = 1.0 / lambda;
        v = DenseVector::from_slice(&w.iter().map(|x| x * inv).collect::<Vec<_>>()).unwrap();
    }
    lambda
}

/// Draws one random MPC instance. Deterministic given the argument tuple.
///
/// Recipe: `adyn` entries i.i.d. standard normal, then scaled so the
/// power-iteration estimate of the spectral radius is 0.99; `bdyn` i.i.d.
/// standard normal; `qcost = diag(d)` with `d ~ U[0,10)`; `rcost = 0.1·I`;
/// symmetric boxes `x_upper ~ U[1,2)`, `u_upper ~ U[0.5,1)` with lower
/// bounds their negations; feasible initial states drawn from the halved
/// box `U[0.5·x_lower, 0.5·x_upper)`, infeasible ones placed at
/// `(1+w)·x_upper` elementwise with independent `w ~ U[0,1)`.
pub fn generate(
    nx: usize,
    nu: usize,
    horizon: usize,
    alpha: f64,
    scenario: Scenario,
    seed: u64,
) -> MpcInstance {
    assert!(
        nx >= 1 && nu >= 1 && horizon >= 1,
        "generate: dimensions must be at least 1"
    );
    assert!(
        alpha > 0.0 && alpha.is_finite(),
        "generate: alpha must be a positive finite real"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let araw: Vec<f64> = (0..nx * nx).map(|_| normal(&mut rng)).collect();
    let bdyn = DenseMatrix::new(nx, nu, (0..nx * nu).map(|_| normal(&mut rng)).collect()).unwrap();

    let mut qcost = DenseMatrix::zeros(nx, nx);
    for i in 0..nx {
        qcost.set(i, i, uniform(&mut rng, 0.0, 10.0));
    }
    let mut rcost = DenseMatrix::zeros(nu, nu);
    for i in 0..nu {
        rcost.set(i, i, 0.1);
    }

    let x_upper = DenseVector::new((0..nx).map(|_| uniform(&mut rng, 1.0, 2.0)).collect()).unwrap();
    let x_lower = DenseVector::new(x_upper.iter().map(|v| -v).collect()).unwrap();
    let u_upper = DenseVector::new((0..nu).map(|_| uniform(&mut rng, 0.5, 1.0)).collect()).unwrap();
    let u_lower = DenseVector::new(u_upper.iter().map(|v| -v).collect()).unwrap();

    let x_init = DenseVector::new(
        (0..nx)
            .map(|i| match scenario {
                Scenario::Feasible => uniform(&mut rng, 0.5 * x_lower[i], 0.5 * x_upper[i]),
                Scenario::Infeasible => (1.0 + unit(&mut rng)) * x_upper[i],
            })
            .collect(),
    )
    .unwrap();

    let raw = DenseMatrix::new(nx, nx, araw).unwrap();
    let estimate = spectral_estimate(&raw);
    let adyn = if estimate > 0.0 {
        let factor = 0.99 / estimate;
        DenseMatrix::new(nx, nx, raw.as_slice().iter().map(|v| v * factor).collect()).unwrap()
    } else {
        raw
    };

    MpcInstance {
        nx,
        nu,
        horizon,
        adyn,
        bdyn,
        qcost,
        rcost,
        x_lower,
        x_upper,
        u_lower,
        u_upper,
        x_init,
        alpha,
        seed,
    }
}

/// Number of decision variables of the assembled QP.
pub fn num_vars(nx: usize, nu: usize, horizon: usize) -> usize {
    nx * (horizon + 1) + nu * horizon
}

/// Number of constraint rows of the assembled QP.
pub fn num_constraints(nx: usize, nu: usize, horizon: usize) -> usize {
    nx * horizon + nx + nx * (horizon + 1) + nu * horizon
}

/// Stacks the instance into one soft QP.
///
/// Decision vector: `(x_0, …, x_N, u_0, …, u_{N-1})`. Constraint rows, in
/// order: dynamics equalities `x_{k+1} - A x_k - B u_k = 0` for
/// `k = 0..N-1` (bounds `l = u = 0`); initial-state equality `x_0 = x_s`;
/// state boxes for `k = 0..N`; control boxes for `k = 0..N-1`. The cost is
/// `blockdiag(Q, …, Q, R, …, R)` with zero linear term, and the instance's
/// `alpha` softens every row.
pub fn assemble(inst: &MpcInstance) -> SoftQpProblem {
    let (nx, nu, horizon) = (inst.nx, inst.nu, inst.horizon);
    let n = num_vars(nx, nu, horizon);
    let p = num_constraints(nx, nu, horizon);
    let x_block = |k: usize| k * nx; // column offset of x_k
    let u_block = |k: usize| nx * (horizon + 1) + k * nu; // column offset of u_k

    let mut hessian = DenseMatrix::zeros(n, n);
    for k in 0..=horizon {
        for i in 0..nx {
            for j in 0..nx {
                hessian.set(x_block(k) + i, x_block(k) + j, inst.qcost.get(i, j));
            }
        }
    }
    for k in 0..horizon {
        for i in 0..nu {
            for j in 0..nu {
                hessian.set(u_block(k) + i, u_block(k) + j, inst.rcost.get(i, j));
            }
        }
    }

    let mut cons = DenseMatrix::zeros(p, n);
    let mut lower = vec![0.0; p];
    let mut upper = vec![0.0; p];
    let mut row = 0;

    // Dynamics: x_{k+1} - A x_k - B u_k = 0.
    for k in 0..horizon {
        for i in 0..nx {
            cons.set(row, x_block(k + 1) + i, 1.0);
            for j in 0..nx {
                cons.set(row, x_block(k) + j, -inst.adyn.get(i, j));
            }
            for j in 0..nu {
                cons.set(row, u_block(k) + j, -inst.bdyn.get(i, j));
            }
            row += 1;
        }
    }
    // Initial state: x_0 = x_s.
    for i in 0..nx {
        cons.set(row, x_block(0) + i, 1.0);
        lower[row] = inst.x_init[i];
        upper[row] = inst.x_init[i];
        row += 1;
    }
    // State boxes for every stage.
    for k in 0..=horizon {
        for i in 0..nx {
            cons.set(row, x_block(k) + i, 1.0);
            lower[row] = inst.x_lower[i];
            upper[row] = inst.x_upper[i];
            row += 1;
        }
    }
    // Control boxes.
    for k in 0..horizon {
        for i in 0..nu {
            cons.set(row, u_block(k) + i, 1.0);
            lower[row] = inst.u_lower[i];
            upper[row] = inst.u_upper[i];
            row += 1;
        }
    }
    debug_assert_eq!(row, p);

    let base = QpProblem::new(
        hessian,
        DenseVector::zeros(n),
        cons,
        DenseVector::new(lower).unwrap(),
        DenseVector::new(upper).unwrap(),
    )
    .expect("assembled dimensions are consistent by construction");
    SoftQpProblem::new(base, inst.alpha).expect("instance alpha validated at generation")
}
