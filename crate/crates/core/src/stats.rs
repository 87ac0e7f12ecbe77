//! Small dense linear-algebra helpers shared by fitting, scores and tests.

use nalgebra::{Cholesky, DMatrix, Dyn};

/// Maximum-likelihood covariance (denominator `n`) and column means.
pub(crate) fn covariance(columns: &[&[f64]]) -> (DMatrix<f64>, Vec<f64>) {
    let p = columns.len();
    let n = columns.first().map_or(0, |c| c.len());
    let means: Vec<f64> = columns
        .iter()
        .map(|c| c.iter().sum::<f64>() / n.max(1) as f64)
        .collect();
    let mut cov = DMatrix::zeros(p, p);
    for a in 0..p {
        for b in a..p {
            let (ca, cb) = (columns[a], columns[b]);
            let s: f64 = ca
                .iter()
                .zip(cb)
                .map(|(x, y)| (x - means[a]) * (y - means[b]))
                .sum();
            let v = s / n.max(1) as f64;
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }
    (cov, means)
}

pub(crate) fn submatrix(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

/// Cholesky factor of a symmetric matrix after rescaling to unit diagonal;
/// `None` when the matrix is not numerically positive definite.
pub(crate) fn checked_cholesky(m: &DMatrix<f64>) -> Option<Cholesky<f64, Dyn>> {
    let d: Vec<f64> = (0..m.nrows()).map(|i| m[(i, i)]).collect();
    if d.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return None;
    }
    let scaled = DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| {
        m[(i, j)] / (d[i] * d[j]).sqrt()
    });
    let chol = Cholesky::new(scaled)?;
    let min_pivot = chol.l_dirty().diagonal().iter().cloned().fold(f64::INFINITY, f64::min);
    if min_pivot < 1e-7 {
        return None;
    }
    Cholesky::new(m.clone())
}

pub(crate) fn log_det(m: &DMatrix<f64>) -> Option<f64> {
    if m.nrows() == 0 {
        return Some(0.0);
    }
    let chol = checked_cholesky(m)?;
    Some(2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>())
}

/// Residual variance of `y` regressed on `xs` from a covariance matrix, with
/// the regression coefficients.
pub(crate) fn conditional_variance(
    cov: &DMatrix<f64>,
    y: usize,
    xs: &[usize],
) -> Option<(f64, Vec<f64>)> {
    let syy = cov[(y, y)];
    if xs.is_empty() {
        return Some((syy, Vec::new()));
    }
    let sxx = submatrix(cov, xs, xs);
    let sxy = DMatrix::from_fn(xs.len(), 1, |i, _| cov[(xs[i], y)]);
    let chol = checked_cholesky(&sxx)?;
    let beta = chol.solve(&sxy);
    let explained = (sxy.transpose() * &beta)[(0, 0)];
    Some((syy - explained, beta.iter().copied().collect()))
}

/// Partial correlation of `x` and `y` given `z`, from the inverse of the
/// covariance submatrix over `{x, y} ∪ z`.
pub(crate) fn partial_correlation(cov: &DMatrix<f64>, x: usize, y: usize, z: &[usize]) -> Option<f64> {
    let mut idx = vec![x, y];
    idx.extend_from_slice(z);
    let sub = submatrix(cov, &idx, &idx);
    let chol = checked_cholesky(&sub)?;
    let prec = chol.inverse();
    let r = -prec[(0, 1)] / (prec[(0, 0)] * prec[(1, 1)]).sqrt();
    Some(r.clamp(-1.0, 1.0))
}
