//! Problem data model: hard QPs, soft (slack-penalized) QPs, the
//! slack-augmented reformulation, validation, regularization, slack
//! recovery, and objective evaluation.
//!
//! A hard problem is `min ½xᵀQx + qᵀx  s.t.  l <= Ax <= u`; a soft problem
//! relaxes every row with a slack `xi` penalized by `(alpha/2)‖xi‖²`.
//! Equality rows are encoded as `l_i == u_i`; one-sided rows carry IEEE
//! infinities in the bound vectors (the only place infinities are allowed).

use crate::linalg::{gram_plus, DenseMatrix, DenseVector, SpdFactorization};
use thiserror::Error;

/// Relative tolerance for the cost-matrix symmetry check in [`QpProblem::validate`].
pub const SYMMETRY_RTOL: f64 = 1e-12;

/// Construction-time errors: shape disagreements and bad scalars.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error(
        "cost matrix is {rows}x{cols} but must be square of order {n} (the linear-term length)"
    )]
    HessianShape { rows: usize, cols: usize, n: usize },
    #[error("constraint matrix has {cols} columns but the problem has {n} variables")]
    ConstraintColumns { cols: usize, n: usize },
    #[error("bound vectors have lengths {lower} and {upper} but there are {p} constraint rows")]
    BoundLength {
        lower: usize,
        upper: usize,
        p: usize,
    },
    #[error("slack penalty weight must be a finite positive real, got {alpha}")]
    BadAlpha { alpha: f64 },
}

/// A semantic defect reported by [`QpProblem::validate`]. Construction
/// already guarantees consistent shapes, so these are the data-level checks.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemIssue {
    #[error("cost matrix is not symmetric: max asymmetry {max_asymmetry:e} exceeds {tol:e}")]
    AsymmetricHessian { max_asymmetry: f64, tol: f64 },
    #[error("lower exceeds upper at row {row}")]
    BoundOrder { row: usize },
    #[error("lower bound is +inf at row {row}")]
    LowerPlusInf { row: usize },
    #[error("upper bound is -inf at row {row}")]
    UpperMinusInf { row: usize },
    #[error("invertibility assumption violated: Q + rho*AᵀA is singular at pivot {pivot} (try regularize)")]
    GramSingular { pivot: usize },
}

/// Hard-constrained QP. Immutable once built; all solver entry points take
/// it by shared reference.
#[derive(Debug, Clone, PartialEq)]
pub struct QpProblem {
    hessian: DenseMatrix,
    linear: DenseVector,
    constraints: DenseMatrix,
    lower: DenseVector,
    upper: DenseVector,
}

impl QpProblem {
    /// Builds a problem, checking shape agreement only; data-level checks
    /// live in [`Self::validate`] so callers can collect every defect.
    pub fn new(
        hessian: DenseMatrix,
        linear: DenseVector,
        constraints: DenseMatrix,
        lower: DenseVector,
        upper: DenseVector,
    ) -> Result<Self, ProblemError> {
        let n = linear.len();
        if hessian.rows() != n || hessian.cols() != n {
            return Err(ProblemError::HessianShape {
                rows: hessian.rows(),
                cols: hessian.cols(),
                n,
            });
        }
        if constraints.cols() != n && constraints.rows() != 0 {
            return Err(ProblemError::ConstraintColumns {
                cols: constraints.cols(),
                n,
            });
        }
        let p = constraints.rows();
        if lower.len() != p || upper.len() != p {
            return Err(ProblemError::BoundLength {
                lower: lower.len(),
                upper: upper.len(),
                p,
            });
        }
        // Normalize the 0 x k edge so `p == 0` problems always agree on n.
        let constraints = if p == 0 && constraints.cols() != n {
            DenseMatrix::zeros(0, n)
        } else {
            constraints
        };
        Ok(Self {
            hessian,
            linear,
            constraints,
            lower,
            upper,
        })
    }

    pub fn num_vars(&self) -> usize {
        self.linear.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.rows()
    }

    pub fn hessian(&self) -> &DenseMatrix {
        &self.hessian
    }

    pub fn linear(&self) -> &DenseVector {
        &self.linear
    }

    pub fn constraints(&self) -> &DenseMatrix {
        &self.constraints
    }

    pub fn lower(&self) -> &DenseVector {
        &self.lower
    }

    pub fn upper(&self) -> &DenseVector {
        &self.upper
    }

    /// Collects every data-level defect: asymmetric cost matrix, crossed or
    /// ill-signed bounds, and a singular `Q + rho*AᵀA` at `rho = 1` (the
    /// invertibility assumption behind every ADMM iteration here).
    pub fn validate(&self) -> Vec<ProblemIssue> {
        let mut issues = Vec::new();
        let max_asymmetry = self.hessian.max_asymmetry();
        let tol = SYMMETRY_RTOL * self.hessian.max_abs();
        if max_asymmetry > tol {
            issues.push(ProblemIssue::AsymmetricHessian { max_asymmetry, tol });
        }
        for row in 0..self.num_constraints() {
            if self.lower[row] > self.upper[row] {
                issues.push(ProblemIssue::BoundOrder { row });
            }
            if self.lower[row] == f64::INFINITY {
                issues.push(ProblemIssue::LowerPlusInf { row });
            }
            if self.upper[row] == f64::NEG_INFINITY {
                issues.push(ProblemIssue::UpperMinusInf { row });
            }
        }
        let m = gram_plus(&self.hessian, &self.constraints, 1.0)
            .expect("shapes are validated at construction");
        if let Err(crate::linalg::LinalgError::NotPositiveDefinite { pivot }) =
            SpdFactorization::factor(&m)
        {
            issues.push(ProblemIssue::GramSingular { pivot });
        }
        issues
    }

    /// Hard objective `½xᵀQx + qᵀx`.
    pub fn objective(&self, x: &DenseVector) -> f64 {
        assert_eq!(x.len(), self.num_vars(), "objective: x has wrong length");
        0.5 * x.dot(&self.hessian.matvec(x)) + self.linear.dot(x)
    }
}

/// Soft-constrained QP: a base problem plus the scalar slack penalty weight.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftQpProblem {
    base: QpProblem,
    alpha: f64,
}

impl SoftQpProblem {
    pub fn new(base: QpProblem, alpha: f64) -> Result<Self, ProblemError> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(ProblemError::BadAlpha { alpha });
        }
        Ok(Self { base, alpha })
    }

    pub fn base(&self) -> &QpProblem {
        &self.base
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// The slack-augmented reformulation of a soft QP: `n + p` variables
/// `(x, xi)`, cost `blockdiag(Q, alpha*I)`, constraints `[A  I]` with the
/// original bounds. Solving it as a *hard* QP solves the soft problem.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedProblem {
    qp: QpProblem,
    base_vars: usize,
}

impl AugmentedProblem {
    /// The augmented data viewed as an ordinary hard QP.
    pub fn qp(&self) -> &QpProblem {
        &self.qp
    }

    /// Number of original decision variables (`n`); the remaining entries of
    /// an augmented solution vector are the slacks.
    pub fn base_vars(&self) -> usize {
        self.base_vars
    }

    /// Splits an augmented solution `(x, xi)` back into its parts.
    pub fn split(&self, xbar: &DenseVector) -> (DenseVector, DenseVector) {
        assert_eq!(
            xbar.len(),
            self.qp.num_vars(),
            "split: wrong augmented length"
        );
        let (x, xi) = xbar.as_slice().split_at(self.base_vars);
        (
            DenseVector::from_raw(x.to_vec()),
            DenseVector::from_raw(xi.to_vec()),
        )
    }
}

/// Builds the slack-augmented reformulation of `p`.
pub fn augment(p: &SoftQpProblem) -> AugmentedProblem {
    let base = p.base();
    let n = base.num_vars();
    let rows = base.num_constraints();

    let mut hessian = DenseMatrix::zeros(n + rows, n + rows);
    for i in 0..n {
        for j in 0..n {
            hessian.set(i, j, base.hessian().get(i, j));
        }
    }
    for k in 0..rows {
        hessian.set(n + k, n + k, p.alpha());
    }

    let mut linear = vec![0.0; n + rows];
    linear[..n].copy_from_slice(base.linear().as_slice());

    let mut constraints = DenseMatrix::zeros(rows, n + rows);
    for i in 0..rows {
        for j in 0..n {
            constraints.set(i, j, base.constraints().get(i, j));
        }
        constraints.set(i, n + i, 1.0);
    }

    let qp = QpProblem::new(
        hessian,
        DenseVector::from_raw(linear),
        constraints,
        base.lower().clone(),
        base.upper().clone(),
    )
    .expect("augmented shapes are consistent by construction");
    AugmentedProblem { qp, base_vars: n }
}

/// Appends the `n` identity rows `e_iᵀ` with free bounds `(-inf, +inf)`.
///
/// The appended rows never constrain anything, but they make `AᵀA`
/// invertible, which repairs problems that fail the invertibility
/// assumption (e.g. `p = 0` with singular `Q`). Rows are appended
/// unconditionally; the cost is `O(n)` extra projection work per iteration.
pub fn regularize(p: &QpProblem) -> QpProblem {
    let n = p.num_vars();
    let rows = p.num_constraints();
    let mut constraints = DenseMatrix::zeros(rows + n, n);
    for i in 0..rows {
        for j in 0..n {
            constraints.set(i, j, p.constraints().get(i, j));
        }
    }
    for i in 0..n {
        constraints.set(rows + i, i, 1.0);
    }
    let mut lower = p.lower().as_slice().to_vec();
    let mut upper = p.upper().as_slice().to_vec();
    lower.extend(std::iter::repeat_n(f64::NEG_INFINITY, n));
    upper.extend(std::iter::repeat_n(f64::INFINITY, n));
    QpProblem::new(
        p.hessian().clone(),
        p.linear().clone(),
        constraints,
        DenseVector::from_raw(lower),
        DenseVector::from_raw(upper),
    )
    .expect("regularized shapes are consistent by construction")
}

/// Recovers the slack vector of the smoothed scheme in closed form.
///
/// With `zt_i = A_i x + mu_i / rho`, each coordinate is
///
/// ```text
/// xi_i = rho/(rho+alpha) * (l_i - zt_i)   if zt_i < l_i
/// xi_i = rho/(rho+alpha) * (u_i - zt_i)   if zt_i > u_i
/// xi_i = 0                                otherwise
/// ```
///
/// Equality rows (`l_i == u_i`) fall out of the same three branches: both
/// violated-side formulas coincide there and an exact hit gives zero slack.
/// In the two boundary cases the smoothed projection `z` satisfies
/// `z + xi = bound` exactly (algebraically:
/// `rho/(rho+alpha)(l - zt) + (rho*zt + alpha*l)/(rho+alpha) = l`).
pub fn recover_slack(
    x: &DenseVector,
    mu: &DenseVector,
    rho: f64,
    p: &SoftQpProblem,
) -> DenseVector {
    let base = p.base();
    assert_eq!(
        x.len(),
        base.num_vars(),
        "recover_slack: x has wrong length"
    );
    assert_eq!(
        mu.len(),
        base.num_constraints(),
        "recover_slack: mu has wrong length"
    );
    assert!(rho > 0.0, "recover_slack: rho must be positive");
    let shrink = rho / (rho + p.alpha());
    let ax = base.constraints().matvec(x);
    let mut xi = vec![0.0; base.num_constraints()];
    for i in 0..xi.len() {
        let zt = ax[i] + mu[i] / rho;
        let (l, u) = (base.lower()[i], base.upper()[i]);
        if zt < l {
            xi[i] = shrink * (l - zt);
        } else if zt > u {
            xi[i] = shrink * (u - zt);
        }
    }
    DenseVector::from_raw(xi)
}

/// Soft objective `½xᵀQx + qᵀx + (alpha/2)‖xi‖²`.
pub fn objective_soft(x: &DenseVector, xi: &DenseVector, p: &SoftQpProblem) -> f64 {
    assert_eq!(
        xi.len(),
        p.base().num_constraints(),
        "objective_soft: xi has wrong length"
    );
    let slack_sq: f64 = xi.iter().map(|v| v * v).sum();
    p.base().objective(x) + 0.5 * p.alpha() * slack_sq
}
