//! Small dense helpers on top of `nalgebra`: norms, SVD-based rank and
//! null spaces, least squares.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Relative singular-value cut used for rank decisions.
pub const DEFAULT_TOL_RANK: f64 = 1e-10;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// `a + s * b`
pub fn axpy(a: &[f64], s: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + s * y).collect()
}

/// Matrix whose rows are `rows`; `ncols` fixes the shape when `rows` is empty.
pub fn from_rows(rows: &[Vec<f64>], ncols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j])
}

/// Matrix whose columns are `cols`.
pub fn from_columns(cols: &[Vec<f64>], nrows: usize) -> DMatrix<f64> {
    DMatrix::from_fn(nrows, cols.len(), |i, j| cols[j][i])
}

/// Singular values in descending order (`min(rows, cols)` of them).
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// `#{σ_i > tol_rank · σ_max}`.
pub fn numerical_rank(m: &DMatrix<f64>, tol_rank: f64) -> usize {
    let s = singular_values(m);
    let Some(&max) = s.first() else { return 0 };
    s.iter().filter(|&&v| v > tol_rank * max).count()
}

/// Orthonormal basis (as columns) of the null space of a full-row-rank
/// `m x n` matrix, taken from the trailing right singular vectors.
pub fn null_space_basis(a: &DMatrix<f64>, tol_rank: f64) -> Result<DMatrix<f64>> {
    let (m, n) = a.shape();
    let rank = numerical_rank(a, tol_rank);
    if m > n || rank < m {
        return Err(Error::RankDeficient { rank, required: m });
    }
    if m == 0 {
        return Ok(DMatrix::identity(n, n));
    }
    // pad to square so the decomposition returns all n right singular vectors
    let mut square = DMatrix::zeros(n, n);
    square.view_mut((0, 0), (m, n)).copy_from(a);
    let svd = square.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let mut z = DMatrix::zeros(n, n - m);
    for (col, &k) in order[m..].iter().enumerate() {
        z.set_column(col, &v_t.row(k).transpose());
    }
    Ok(z)
}

/// Unit right singular vector for the smallest singular value of `m`
/// (`m` has at least one column). Rows are zero-padded when `m` is wide so
/// that all right singular vectors are available.
pub fn smallest_right_singular_vector(m: &DMatrix<f64>) -> DVector<f64> {
    let (r, c) = m.shape();
    let mut square = DMatrix::zeros(r.max(c), c);
    square.view_mut((0, 0), (r, c)).copy_from(m);
    let svd = square.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let k = (0..svd.singular_values.len())
        .min_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]))
        .expect("at least one column");
    v_t.row(k).transpose()
}

/// Minimum-norm least-squares solution of `a x ≈ b`; singular values below
/// `1e-13 · σ_max` are treated as zero.
pub fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    if a.ncols() == 0 {
        return DVector::zeros(0);
    }
    let svd = a.clone().svd(true, true);
    let max = svd.singular_values.iter().fold(0.0f64, |m, &s| m.max(s));
    if max == 0.0 {
        return DVector::zeros(a.ncols());
    }
    svd.solve(b, 1e-13 * max).expect("both factors computed")
}
