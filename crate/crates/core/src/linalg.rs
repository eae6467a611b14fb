//! Small dense decompositions through nalgebra.

use nalgebra::DMatrix;
use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub fn to_na(m: &Array2<C64>) -> DMatrix<C64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

pub fn from_na(m: &DMatrix<C64>) -> Array2<C64> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

/// Matrix whose columns are the given vectors.
pub fn columns(cols: &[Array1<C64>]) -> Array2<C64> {
    let n = cols.first().map_or(0, |c| c.len());
    Array2::from_shape_fn((n, cols.len()), |(i, j)| cols[j][i])
}

/// Singular values in decreasing order.
pub fn singular_values(m: &Array2<C64>) -> Vec<f64> {
    let mut s: Vec<f64> = to_na(m).singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Count of singular values above `rel_tol · σ_max`.
pub fn numerical_rank(m: &Array2<C64>, rel_tol: f64) -> usize {
    let s = singular_values(m);
    let top = s.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return 0;
    }
    s.iter().filter(|&&x| x > rel_tol * top).count()
}

/// `σ_max / σ_min`; infinite for singular input.
pub fn condition_number(m: &Array2<C64>) -> f64 {
    let s = singular_values(m);
    match (s.first(), s.last()) {
        (Some(&a), Some(&b)) if b > 0.0 => a / b,
        _ => f64::INFINITY,
    }
}

/// Minimum-norm least-squares solution of `a x ≈ b`, dropping singular values below `rcond·σ_max`.
pub fn lstsq(a: &Array2<C64>, b: &Array1<C64>, rcond: f64) -> Result<Array1<C64>> {
    let svd = to_na(a).svd(true, true);
    let top = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let rhs = DMatrix::from_fn(b.len(), 1, |i, _| b[i]);
    let x = svd
        .solve(&rhs, rcond * top)
        .map_err(|e| Error::IllConditioned(format!("least squares failed: {e}")))?;
    Ok(x.column(0).iter().copied().collect())
}

/// `x` with `x · o = i`, for square invertible `o`.
pub fn solve_right(i: &Array2<C64>, o: &Array2<C64>) -> Result<Array2<C64>> {
    let inv = to_na(o)
        .try_inverse()
        .ok_or_else(|| Error::IllConditioned("matrix is singular".into()))?;
    Ok(from_na(&(to_na(i) * inv)))
}

pub fn adjoint(m: &Array2<C64>) -> Array2<C64> {
    m.t().mapv(|x| x.conj())
}
