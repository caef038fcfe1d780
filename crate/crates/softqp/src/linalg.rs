//! Dense row-major matrices, vectors, and an LDLᵀ factorization for
//! symmetric positive definite systems.
//!
//! Everything here is deliberately plain `Vec<f64>` storage with unblocked
//! loops: the solver's cost model (cubic factorizations, quadratic
//! back-solves) is part of what the benchmark layer measures, so there is no
//! hidden BLAS and no sparse format.

use thiserror::Error;

/// Relative pivot tolerance for [`SpdFactorization::factor`]: a pivot below
/// `PIVOT_RTOL * max_diag` of the input matrix counts as numerically
/// non-positive.
pub const PIVOT_RTOL: f64 = 1e-12;

/// Errors produced by the dense kernels.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinalgError {
    /// Operand shapes do not line up; both shapes are reported.
    #[error(
        "{op}: dimension mismatch between {left_rows}x{left_cols} and {right_rows}x{right_cols}"
    )]
    DimensionMismatch {
        op: &'static str,
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },
    /// Backing storage length disagrees with the requested shape.
    #[error("matrix data has {len} entries, expected {rows}x{cols} = {}", rows * cols)]
    DataLength {
        rows: usize,
        cols: usize,
        len: usize,
    },
    /// A pivot fell below tolerance during LDLᵀ: the matrix is not
    /// numerically positive definite. `pivot` is the offending column.
    #[error("matrix is not positive definite (pivot {pivot} below tolerance)")]
    NotPositiveDefinite { pivot: usize },
    /// Matrices must be fully finite (no NaN, no infinities).
    #[error("non-finite matrix entry at ({row}, {col})")]
    NonFiniteEntry { row: usize, col: usize },
    /// Vectors may carry infinities (bounds do) but never NaN.
    #[error("NaN vector entry at index {index}")]
    NanEntry { index: usize },
}

/// Dense row-major matrix. Entries are always finite.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    /// Builds a matrix from row-major data, validating length and finiteness.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, LinalgError> {
        if data.len() != rows * cols {
            return Err(LinalgError::DataLength {
                rows,
                cols,
                len: data.len(),
            });
        }
        for (k, &v) in data.iter().enumerate() {
            if !v.is_finite() {
                return Err(LinalgError::NonFiniteEntry {
                    row: k / cols.max(1),
                    col: k % cols.max(1),
                });
            }
        }
        Ok(Self { rows, cols, data })
    }

    /// All-zeros matrix.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Identity matrix of order `n`.
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Convenience constructor from row slices (used heavily in tests).
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self, LinalgError> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(LinalgError::DataLength {
                    rows: r,
                    cols: c,
                    len: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::new(r, c, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j] = v;
    }

    /// Row `i` as a slice.
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Largest absolute entry (0 for an empty matrix).
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// Largest absolute asymmetry `|M_ij - M_ji|`; requires a square matrix.
    pub fn max_asymmetry(&self) -> f64 {
        debug_assert_eq!(self.rows, self.cols);
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = DenseMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    /// `self * v`. Panics on dimension mismatch (programmer error; the solver
    /// validates problem shapes once at construction).
    pub fn matvec(&self, v: &DenseVector) -> DenseVector {
        assert_eq!(self.cols, v.len(), "matvec: dimension mismatch");
        let mut out = Vec::with_capacity(self.rows);
        for i in 0..self.rows {
            out.push(dot_kernel(self.row(i), v.as_slice()));
        }
        DenseVector::from_raw(out)
    }

    /// `selfᵀ * v` without forming the transpose. Panics on mismatch.
    pub fn transpose_matvec(&self, v: &DenseVector) -> DenseVector {
        assert_eq!(self.rows, v.len(), "transpose_matvec: dimension mismatch");
        let mut out = vec![0.0; self.cols];
        for (i, &w) in v.as_slice().iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let row = self.row(i);
            for (o, a) in out.iter_mut().zip(row) {
                *o += a * w;
            }
        }
        DenseVector::from_raw(out)
    }
}

/// Dot product accumulated over eight fixed, independent lanes.
///
/// The lane structure breaks the sequential dependency chain a naive fold
/// would create (multiply-add latency would otherwise bound every dense
/// kernel), while keeping the summation order fixed, so results are
/// deterministic on every platform. Lengths below eight reduce to the
/// plain left-to-right sum.
#[inline]
pub(crate) fn dot_kernel(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let n8 = a.len() - a.len() % 8;
    let mut acc = [0.0f64; 8];
    for (ca, cb) in a[..n8].chunks_exact(8).zip(b[..n8].chunks_exact(8)) {
        for lane in 0..8 {
            acc[lane] += ca[lane] * cb[lane];
        }
    }
    let mut s = ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7]));
    for (x, y) in a[n8..].iter().zip(&b[n8..]) {
        s += x * y;
    }
    s
}

/// Dense product `a * b`; fails with both shapes on mismatch.
pub fn matmul(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
    if a.cols != b.rows {
        return Err(LinalgError::DimensionMismatch {
            op: "matmul",
            left_rows: a.rows,
            left_cols: a.cols,
            right_rows: b.rows,
            right_cols: b.cols,
        });
    }
    let mut out = DenseMatrix::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        let arow = a.row(i);
        for (k, &aik) in arow.iter().enumerate() {
            if aik == 0.0 {
                continue;
            }
            let brow = b.row(k);
            let orow = &mut out.data[i * b.cols..(i + 1) * b.cols];
            for (o, &bkj) in orow.iter_mut().zip(brow) {
                *o += aik * bkj;
            }
        }
    }
    Ok(out)
}

/// Gram matrix `aᵀ a`, accumulated row by row on the upper triangle and
/// mirrored, so the result is exactly symmetric. Zero entries are skipped,
/// which keeps assembly cheap for the very sparse constraint matrices the
/// benchmark generates while remaining a plain dense kernel.
pub fn gram(a: &DenseMatrix) -> DenseMatrix {
    let n = a.cols;
    let mut g = DenseMatrix::zeros(n, n);
    let mut nz: Vec<usize> = Vec::with_capacity(n);
    for k in 0..a.rows {
        let row = a.row(k);
        nz.clear();
        nz.extend(
            row.iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(j, _)| j),
        );
        for (pos, &i) in nz.iter().enumerate() {
            let aki = row[i];
            for &j in &nz[pos..] {
                g.data[i * n + j] += aki * row[j];
            }
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let v = g.get(i, j);
            g.set(j, i, v);
        }
    }
    g
}

/// `q + rho * g` for symmetric `q`, `g`; upper triangle mirrored so the
/// output is exactly symmetric.
pub(crate) fn add_scaled_sym(q: &DenseMatrix, g: &DenseMatrix, rho: f64) -> DenseMatrix {
    debug_assert_eq!(q.rows, q.cols);
    debug_assert_eq!(q.rows, g.rows);
    let n = q.rows;
    let mut m = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = q.get(i, j) + rho * g.get(i, j);
            m.set(i, j, v);
            m.set(j, i, v);
        }
    }
    m
}

/// The ADMM normal matrix `q + rho * aᵀa`. `q` must be `n x n` and `a`
/// `p x n`; the output is exactly symmetric.
pub fn gram_plus(q: &DenseMatrix, a: &DenseMatrix, rho: f64) -> Result<DenseMatrix, LinalgError> {
    if q.rows != q.cols || q.cols != a.cols {
        return Err(LinalgError::DimensionMismatch {
            op: "gram_plus",
            left_rows: q.rows,
            left_cols: q.cols,
            right_rows: a.rows,
            right_cols: a.cols,
        });
    }
    Ok(add_scaled_sym(q, &gram(a), rho))
}

/// Dense vector. Entries may be infinite (bounds are) but never NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseVector {
    data: Vec<f64>,
}

impl DenseVector {
    /// Builds a vector, rejecting NaN entries.
    pub fn new(data: Vec<f64>) -> Result<Self, LinalgError> {
        for (index, v) in data.iter().enumerate() {
            if v.is_nan() {
                return Err(LinalgError::NanEntry { index });
            }
        }
        Ok(Self { data })
    }

    /// Internal constructor for values produced by our own arithmetic.
    #[inline]
    pub(crate) fn from_raw(data: Vec<f64>) -> Self {
        debug_assert!(
            data.iter().all(|v| !v.is_nan()),
            "internal arithmetic produced NaN"
        );
        Self { data }
    }

    pub fn zeros(n: usize) -> Self {
        Self { data: vec![0.0; n] }
    }

    pub fn from_slice(s: &[f64]) -> Result<Self, LinalgError> {
        Self::new(s.to_vec())
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.data.iter()
    }

    /// Infinity norm; 0 for the empty vector.
    pub fn inf_norm(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// Euclidean norm.
    pub fn two_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &DenseVector) -> f64 {
        assert_eq!(self.len(), other.len(), "dot: dimension mismatch");
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }
}

impl std::ops::Index<usize> for DenseVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.data[i]
    }
}

/// LDLᵀ factorization of a symmetric positive definite matrix.
///
/// `L` (unit lower triangular, strictly-lower part) and `D` (diagonal) are
/// packed into one row-major square buffer. Factoring fails with
/// [`LinalgError::NotPositiveDefinite`] as soon as a pivot drops below
/// [`PIVOT_RTOL`] relative to the largest diagonal entry of the input.
#[derive(Debug, Clone)]
pub struct SpdFactorization {
    dim: usize,
    /// Strictly lower triangle holds L, diagonal holds D.
    packed: Vec<f64>,
}

impl SpdFactorization {
    /// Factors a symmetric positive definite matrix.
    ///
    /// Symmetry is the caller's contract (`gram_plus` output always
    /// qualifies); only the lower triangle is read.
    pub fn factor(m: &DenseMatrix) -> Result<Self, LinalgError> {
        if m.rows != m.cols {
            return Err(LinalgError::DimensionMismatch {
                op: "factor",
                left_rows: m.rows,
                left_cols: m.cols,
                right_rows: m.rows,
                right_cols: m.cols,
            });
        }
        let n = m.rows;
        let mut max_diag = 0.0f64;
        for i in 0..n {
            max_diag = max_diag.max(m.get(i, i));
        }
        let tol = PIVOT_RTOL * max_diag;

        let mut f = m.data.clone();
        // Scratch for the d-scaled prefix of the pivot row: w[k] = L_jk d_k.
        // Precomputing it turns both inner loops into plain dot products.
        let mut w = vec![0.0; n];
        for j in 0..n {
            let (head, tail) = f.split_at_mut(j * n);
            let (row_j, below) = tail.split_at_mut(n);
            for k in 0..j {
                w[k] = row_j[k] * head[k * n + k];
            }
            // d_j = M_jj - sum_k L_jk^2 d_k
            let d = row_j[j] - dot_kernel(&row_j[..j], &w[..j]);
            // Negated form on purpose: a NaN pivot must fail, not pass.
            #[allow(clippy::neg_cmp_op_on_partial_ord)]
            if !(d > tol) {
                return Err(LinalgError::NotPositiveDefinite { pivot: j });
            }
            row_j[j] = d;
            // Column j of L below the diagonal.
            for row_i in below.chunks_exact_mut(n) {
                let v = row_i[j] - dot_kernel(&row_i[..j], &w[..j]);
                row_i[j] = v / d;
            }
        }
        Ok(Self { dim: n, packed: f })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Solves `M y = b` using the stored factors.
    pub fn solve(&self, b: &DenseVector) -> Result<DenseVector, LinalgError> {
        let n = self.dim;
        if b.len() != n {
            return Err(LinalgError::DimensionMismatch {
                op: "solve",
                left_rows: n,
                left_cols: n,
                right_rows: b.len(),
                right_cols: 1,
            });
        }
        let f = &self.packed;
        let mut y = b.as_slice().to_vec();
        // Forward: L w = b, reading each row's contiguous prefix.
        for i in 0..n {
            let (head, rest) = y.split_at_mut(i);
            rest[0] -= dot_kernel(&f[i * n..i * n + i], head);
        }
        // Diagonal: D u = w.
        for i in 0..n {
            y[i] /= f[i * n + i];
        }
        // Backward: Lᵀ y = u, in scatter form so the factor is still read
        // along contiguous rows: once y_k is final, its contribution
        // L_k,0..k · y_k is subtracted from the entries above it.
        for k in (0..n).rev() {
            let yk = y[k];
            if yk == 0.0 {
                continue;
            }
            let row_k = &f[k * n..k * n + k];
            for (yi, l) in y[..k].iter_mut().zip(row_k) {
                *yi -= l * yk;
            }
        }
        Ok(DenseVector::from_raw(y))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn solve_2x2_known_values() {
        // Frozen from an independent solve: [[4,2],[2,3]] y = [8,7] -> [1.25, 1.5].
        let m = DenseMatrix::from_rows(&[&[4.0, 2.0], &[2.0, 3.0]]).unwrap();
        let f = SpdFactorization::factor(&m).unwrap();
        let y = f
            .solve(&DenseVector::from_slice(&[8.0, 7.0]).unwrap())
            .unwrap();
        assert_close(y[0], 1.25, 1e-15);
        assert_close(y[1], 1.5, 1e-15);
    }

    #[test]
    fn identity_solves_are_exact() {
        let f = SpdFactorization::factor(&DenseMatrix::identity(3)).unwrap();
        let b = DenseVector::from_slice(&[3.0, -1.0, 0.5]).unwrap();
        let y = f.solve(&b).unwrap();
        assert_eq!(y.as_slice(), b.as_slice());
    }

    #[test]
    fn indefinite_matrix_is_rejected_with_pivot_index() {
        // Eigenvalues 3 and -1; elimination hits the negative pivot at column 1.
        let m = DenseMatrix::from_rows(&[&[1.0, 2.0], &[2.0, 1.0]]).unwrap();
        match SpdFactorization::factor(&m) {
            Err(LinalgError::NotPositiveDefinite { pivot }) => assert_eq!(pivot, 1),
            other => panic!("expected NotPositiveDefinite, got {other:?}"),
        }
    }

    #[test]
    fn zero_matrix_fails_at_first_pivot() {
        let m = DenseMatrix::zeros(1, 1);
        match SpdFactorization::factor(&m) {
            Err(LinalgError::NotPositiveDefinite { pivot }) => assert_eq!(pivot, 0),
            other => panic!("expected NotPositiveDefinite, got {other:?}"),
        }
    }

    #[test]
    fn near_singular_pivot_is_rejected() {
        // Second pivot is 1e-14 relative to max diagonal 1: below PIVOT_RTOL.
        let m = DenseMatrix::from_rows(&[&[1.0, 0.0], &[0.0, 1e-14]]).unwrap();
        assert!(matches!(
            SpdFactorization::factor(&m),
            Err(LinalgError::NotPositiveDefinite { pivot: 1 })
        ));
    }

    #[test]
    fn solve_rejects_wrong_length() {
        let f = SpdFactorization::factor(&DenseMatrix::identity(2)).unwrap();
        let b = DenseVector::zeros(3);
        assert!(matches!(
            f.solve(&b),
            Err(LinalgError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn matmul_known_product() {
        let a = DenseMatrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]).unwrap();
        let b = DenseMatrix::from_rows(&[&[5.0, 6.0], &[7.0, 8.0]]).unwrap();
        let c = matmul(&a, &b).unwrap();
        assert_eq!(c.as_slice(), &[19.0, 22.0, 43.0, 50.0]);
    }

    #[test]
    fn matmul_reports_both_shapes() {
        let a = DenseMatrix::zeros(1, 2);
        let b = DenseMatrix::zeros(1, 2);
        match matmul(&a, &b) {
            Err(LinalgError::DimensionMismatch {
                left_rows: 1,
                left_cols: 2,
                right_rows: 1,
                right_cols: 2,
                ..
            }) => {}
            other => panic!("expected shape-carrying mismatch, got {other:?}"),
        }
    }

    #[test]
    fn matmul_identity_is_noop() {
        let a = DenseMatrix::from_rows(&[&[1.0, -2.5, 3.0], &[0.0, 4.0, 1.5]]).unwrap();
        let c = matmul(&a, &DenseMatrix::identity(3)).unwrap();
        assert_eq!(c, a);
    }

    #[test]
    fn gram_plus_known_values() {
        // Q = I2, A = [[1,0],[1,1]], rho = 2 -> [[5,2],[2,3]] (independently checked).
        let q = DenseMatrix::identity(2);
        let a = DenseMatrix::from_rows(&[&[1.0, 0.0], &[1.0, 1.0]]).unwrap();
        let m = gram_plus(&q, &a, 2.0).unwrap();
        assert_eq!(m.as_slice(), &[5.0, 2.0, 2.0, 3.0]);
    }

    #[test]
    fn gram_plus_empty_constraints_is_q() {
        let q = DenseMatrix::from_rows(&[&[2.0, 1.0], &[1.0, 2.0]]).unwrap();
        let a = DenseMatrix::zeros(0, 2);
        let m = gram_plus(&q, &a, 5.0).unwrap();
        assert_eq!(m, q);
    }

    #[test]
    fn gram_plus_shape_mismatch() {
        let q = DenseMatrix::identity(2);
        let a = DenseMatrix::zeros(3, 4);
        assert!(matches!(
            gram_plus(&q, &a, 1.0),
            Err(LinalgError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn gram_plus_zero_data_is_singular_after_factor() {
        let q = DenseMatrix::zeros(1, 1);
        let a = DenseMatrix::zeros(1, 1);
        let m = gram_plus(&q, &a, 1.0).unwrap();
        assert!(matches!(
            SpdFactorization::factor(&m),
            Err(LinalgError::NotPositiveDefinite { pivot: 0 })
        ));
    }

    #[test]
    fn transpose_matvec_matches_explicit_transpose() {
        let a = DenseMatrix::from_rows(&[&[1.0, 2.0, 0.0], &[0.0, -1.0, 4.0]]).unwrap();
        let v = DenseVector::from_slice(&[3.0, -2.0]).unwrap();
        let lhs = a.transpose_matvec(&v);
        let rhs = a.transpose().matvec(&v);
        assert_eq!(lhs.as_slice(), rhs.as_slice());
    }

    #[test]
    fn constructors_validate_contents() {
        assert!(matches!(
            DenseMatrix::new(1, 2, vec![1.0]),
            Err(LinalgError::DataLength { .. })
        ));
        assert!(matches!(
            DenseMatrix::new(1, 2, vec![1.0, f64::INFINITY]),
            Err(LinalgError::NonFiniteEntry { row: 0, col: 1 })
        ));
        assert!(matches!(
            DenseVector::new(vec![0.0, f64::NAN]),
            Err(LinalgError::NanEntry { index: 1 })
        ));
        // Bounds vectors legitimately carry infinities.
        assert!(DenseVector::new(vec![f64::NEG_INFINITY, f64::INFINITY]).is_ok());
    }

    #[test]
    fn inf_norm_of_empty_vector_is_zero() {
        assert_eq!(DenseVector::zeros(0).inf_norm(), 0.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        /// Random SPD matrix G G^T + I and a right-hand side.
        fn spd_system(n: usize) -> impl Strategy<Value = (DenseMatrix, Vec<f64>)> {
            (
                proptest::collection::vec(-2.0f64..2.0, n * n),
                proptest::collection::vec(-5.0f64..5.0, n),
            )
                .prop_map(move |(g, b)| {
                    let g = DenseMatrix::new(n, n, g).unwrap();
                    let mut m = matmul(&g, &g.transpose()).unwrap();
                    for i in 0..n {
                        let v = m.get(i, i) + 1.0;
                        m.set(i, i, v);
                    }
                    // Mirror to kill rounding asymmetry from matmul.
                    for i in 0..n {
                        for j in (i + 1)..n {
                            let v = m.get(i, j);
                            m.set(j, i, v);
                        }
                    }
                    (m, b)
                })
        }

        proptest! {
            #[test]
            fn factor_solve_residual_small((m, b) in (1usize..8).prop_flat_map(spd_system)) {
                let f = SpdFactorization::factor(&m).unwrap();
                let b = DenseVector::new(b).unwrap();
                let y = f.solve(&b).unwrap();
                let r = m.matvec(&y);
                for i in 0..b.len() {
                    let resid = (r[i] - b[i]).abs();
                    prop_assert!(resid <= 1e-8 * b.inf_norm().max(1.0), "residual {resid}");
                }
            }

            #[test]
            fn gram_plus_is_exactly_symmetric(
                rows in proptest::collection::vec(proptest::collection::vec(-3.0f64..3.0, 4), 0..6),
                rho in 1e-6f64..1e6,
            ) {
                let p = rows.len();
                let flat: Vec<f64> = rows.into_iter().flatten().collect();
                let a = DenseMatrix::new(p, 4, flat).unwrap();
                let q = DenseMatrix::identity(4);
                let m = gram_plus(&q, &a, rho).unwrap();
                prop_assert_eq!(m.max_asymmetry(), 0.0);
                prop_assert!(m.max_asymmetry() <= 1e-14 * m.max_abs().max(1.0));
            }

            #[test]
            fn full_row_rank_tail_keeps_assumption_over_rho_range(
                qdiag in proptest::collection::vec(0.0f64..4.0, 3),
                arows in proptest::collection::vec(proptest::collection::vec(-2.0f64..2.0, 3), 1..4),
            ) {
                // Any PSD Q plus an identity block in A satisfies the
                // invertibility assumption for every admissible rho.
                let n = 3;
                let mut q = DenseMatrix::zeros(n, n);
                for (i, &d) in qdiag.iter().enumerate() {
                    q.set(i, i, d);
                }
                let mut rows: Vec<Vec<f64>> = arows;
                for i in 0..n {
                    let mut e = vec![0.0; n];
                    e[i] = 1.0;
                    rows.push(e);
                }
                let flat: Vec<f64> = rows.iter().flatten().copied().collect();
                let a = DenseMatrix::new(rows.len(), n, flat).unwrap();
                for rho in [1e-6, 1.0, 1e6] {
                    let m = gram_plus(&q, &a, rho).unwrap();
                    prop_assert!(SpdFactorization::factor(&m).is_ok(), "rho = {rho}");
                }
            }
        }
    }
}
