//! Small dense complex linear-algebra helpers on top of nalgebra.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Relative singular-value floor below which a column set counts as rank deficient.
pub const RANK_TOL: f64 = 1e-10;

pub fn select_columns(a: &CMat, idx: &[usize]) -> CMat {
    CMat::from_fn(a.nrows(), idx.len(), |r, c| a[(r, idx[c])])
}

/// Ratio of extreme singular values (`inf` for a rank-deficient matrix).
pub fn condition_number(a: &CMat) -> f64 {
    if a.ncols() == 0 || a.nrows() == 0 {
        return 1.0;
    }
    let sv = a.clone().singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if a.ncols() > a.nrows() || min == 0.0 {
        return f64::INFINITY;
    }
    max / min
}

/// Minimum-norm least-squares solution of `a x = b`, i.e. `a^+ b`.
///
/// Fails when `a` does not have full column rank.
pub fn least_squares(a: &CMat, b: &CMat) -> Result<CMat> {
    if a.nrows() != b.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "lhs has {} rows, rhs has {}",
            a.nrows(),
            b.nrows()
        )));
    }
    if a.ncols() == 0 {
        return Ok(CMat::zeros(0, b.ncols()));
    }
    if a.ncols() > a.nrows() {
        return Err(Error::RankDeficient(format!(
            "{} columns exceed {} rows",
            a.ncols(),
            a.nrows()
        )));
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smax == 0.0 || smin / smax < RANK_TOL {
        return Err(Error::RankDeficient(format!(
            "singular value ratio {:.3e}",
            if smax == 0.0 { 0.0 } else { smin / smax }
        )));
    }
    svd.solve(b, 0.0)
        .map_err(|e| Error::RankDeficient(e.to_string()))
}

/// Frobenius norm.
pub fn fro(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Squared Euclidean norms of each row of `a^H r`, i.e. `||a_j^H R||^2`.
pub fn column_correlations(a: &CMat, r: &CMat) -> Vec<f64> {
    let proj = a.adjoint() * r;
    proj.row_iter()
        .map(|row| row.iter().map(|z| z.norm_sqr()).sum())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn least_squares_recovers_exact_solution() {
        let a = CMat::from_fn(5, 2, |r, c| {
            Complex64::new((r + 1) as f64, (c * r) as f64 - 1.0)
        });
        let x = CMat::from_fn(2, 3, |r, c| Complex64::new(r as f64 - c as f64, 0.5));
        let b = &a * &x;
        let got = least_squares(&a, &b).unwrap();
        assert!(fro(&(got - x)) < 1e-10);
    }

    #[test]
    fn least_squares_rejects_dependent_columns() {
        let a = CMat::from_fn(4, 2, |r, _| Complex64::new(r as f64, 0.0));
        let b = CMat::zeros(4, 1);
        assert!(matches!(
            least_squares(&a, &b),
            Err(Error::RankDeficient(_))
        ));
        assert_eq!(condition_number(&a), f64::INFINITY);
    }
}
