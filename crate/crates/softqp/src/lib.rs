//! Dense ADMM solver for box-constrained quadratic programs, with first-class
//! support for soft (slack-penalized) constraints.
//!
//! The library solves
//!
//! ```text
//!     minimize    0.5 xᵀ Q x + qᵀ x
//!     subject to  l <= A x <= u
//! ```
//!
//! and the soft-constrained variant in which a slack vector `xi` relaxes the
//! box at quadratic cost `(alpha/2) ||xi||²`:
//!
//! ```text
//!     minimize    0.5 xᵀ Q x + qᵀ x + (alpha/2) ||xi||²
//!     subject to  l <= A x + xi <= u
//! ```
//!
//! Three solve paths are provided:
//!
//! * [`solver::solve_hard`] — plain ADMM on the hard-constrained problem;
//! * [`solver::solve_soft_augmented`] — ADMM on the slack-augmented problem
//!   with `n + p` decision variables (the textbook reduction);
//! * [`solver::solve_soft_smoothed`] — ADMM on the original `n` variables,
//!   where the slack penalty is absorbed into a smoothed box projection and
//!   the slack vector is recovered in closed form afterwards.
//!
//! The last two produce the same solutions; the smoothed path factorizes an
//! `n x n` matrix instead of an `(n+p) x (n+p)` one, which is where its speed
//! advantage comes from. The [`oracle`] module contains brute-force reference
//! solvers used by the test suite to certify that equivalence, [`mpc`]
//! generates random model-predictive-control benchmark instances, and
//! [`bench`] runs the residual/timing studies behind the CSV reports.

pub mod bench;
pub mod io;
pub mod linalg;
pub mod mpc;
pub mod oracle;
pub mod problem;
pub mod solver;
