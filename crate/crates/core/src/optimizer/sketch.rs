//! Compact stand-ins for point sets that preserve their singular values.
//!
//! For a set matrix `X` (`D x n`), `X^T = Q R` gives `sigma(X) = sigma(R)` with
//! `R` at most `D x D`. Stacking the factors of two sets gives the factor of
//! their union, so hypothetical merges cost one small SVD.

use nalgebra::{DMatrix, RowDVector};

use crate::dimension::empirical_dimension;
use crate::objective::DEGENERATE_SIGMA;

#[derive(Debug, Clone)]
pub(crate) struct Sketch {
    factor: DMatrix<f64>,
}

impl Sketch {
    pub fn from_point(v: &[f64]) -> Self {
        Self { factor: DMatrix::from_row_slice(1, v.len(), v) }
    }

    pub fn from_columns(a: &DMatrix<f64>, columns: &[usize]) -> Self {
        Self::compress(a.select_columns(columns).transpose())
    }

    fn compress(stacked: DMatrix<f64>) -> Self {
        if stacked.nrows() <= stacked.ncols() {
            return Self { factor: stacked };
        }
        Self { factor: stacked.qr().r() }
    }

    pub fn merge(&self, other: &Sketch) -> Self {
        Self::compress(self.stacked(other.factor.nrows(), |m, offset| {
            m.rows_mut(offset, other.factor.nrows()).copy_from(&other.factor)
        }))
    }

    pub fn with_point(&self, v: &[f64]) -> Self {
        Self::compress(self.stacked(1, |m, offset| m.set_row(offset, &RowDVector::from_row_slice(v))))
    }

    fn stacked(&self, extra: usize, fill: impl FnOnce(&mut DMatrix<f64>, usize)) -> DMatrix<f64> {
        let rows = self.factor.nrows();
        let mut m = DMatrix::zeros(rows + extra, self.factor.ncols());
        m.rows_mut(0, rows).copy_from(&self.factor);
        fill(&mut m, rows);
        m
    }

    /// Empirical dimension of the set; 0 when the set is numerically zero.
    pub fn dimension(&self, eps: f64) -> f64 {
        set_dimension(&self.factor, eps)
    }
}

/// Empirical dimension of the rows (or columns) of `m`, 0 if it is all zero.
pub(crate) fn set_dimension(m: &DMatrix<f64>, eps: f64) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let sigma: Vec<f64> = m.singular_values().iter().copied().collect();
    let max = sigma.iter().copied().fold(0.0, f64::max);
    if max < DEGENERATE_SIGMA {
        return 0.0;
    }
    empirical_dimension(&sigma, eps).expect("finite nonzero spectrum with valid eps")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn merged_sketch_matches_direct_dimension() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = DMatrix::from_fn(9, 40, |_, _| rng.random_range(-1.0..1.0));
        let left: Vec<usize> = (0..25).collect();
        let right: Vec<usize> = (25..40).collect();
        let merged = Sketch::from_columns(&a, &left).merge(&Sketch::from_columns(&a, &right));
        let direct = set_dimension(&a, 0.35);
        assert_abs_diff_eq!(merged.dimension(0.35), direct, epsilon = 1e-12);

        let mut grown = Sketch::from_point(a.column(0).as_slice());
        for j in 1..40 {
            grown = grown.with_point(a.column(j).as_slice());
        }
        assert_abs_diff_eq!(grown.dimension(0.35), direct, epsilon = 1e-12);
    }

    #[test]
    fn zero_point_has_zero_dimension() {
        assert_eq!(Sketch::from_point(&[0.0; 9]).dimension(0.35), 0.0);
        assert_abs_diff_eq!(Sketch::from_point(&[0.0, 3.0, 4.0]).dimension(0.35), 1.0, epsilon = 1e-15);
    }
}
