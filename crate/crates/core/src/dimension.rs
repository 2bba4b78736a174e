//! Singular spectra and the empirical dimension estimator.
//!
//! For singular values `sigma` and `eps` in `(0, 1]`, the empirical dimension
//! is `||sigma||_eps / ||sigma||_delta` with `delta = eps / (1 - eps)`, where
//! `||u||_q = (sum u_i^q)^(1/q)` also for `q < 1`. It is invariant to scaling
//! and rotation, never exceeds the dimension of the span, and converges to the
//! true dimension for isotropic samples. At `eps = 1` the denominator becomes
//! the max norm (effective rank).

use nalgebra::{DMatrix, DVector, SVD};

use crate::error::{GdmError, Result};

/// Relative cutoff below which a singular value counts as zero for rank.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// Thin singular value decomposition with values sorted nonincreasing.
#[derive(Debug, Clone)]
pub struct SingularSpectrum {
    /// Length `r = min(D, N)`.
    pub sigma: DVector<f64>,
    /// `D x r` left singular vectors.
    pub u: DMatrix<f64>,
    /// `N x r` right singular vectors.
    pub v: DMatrix<f64>,
}

impl SingularSpectrum {
    pub fn sigma_max(&self) -> f64 {
        self.sigma.get(0).copied().unwrap_or(0.0)
    }

    /// Number of singular values above `RANK_TOLERANCE * sigma_max`.
    pub fn rank(&self) -> usize {
        numerical_rank(self.sigma.as_slice())
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        &self.u * DMatrix::from_diagonal(&self.sigma) * self.v.transpose()
    }
}

pub fn thin_svd(a: &DMatrix<f64>) -> Result<SingularSpectrum> {
    check_finite(a)?;
    let r = a.nrows().min(a.ncols());
    if r == 0 {
        return Ok(SingularSpectrum {
            sigma: DVector::zeros(0),
            u: DMatrix::zeros(a.nrows(), 0),
            v: DMatrix::zeros(a.ncols(), 0),
        });
    }
    let svd = SVD::new(a.clone(), true, true);
    let u = svd.u.expect("left vectors requested");
    let v_t = svd.v_t.expect("right vectors requested");
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let sigma = DVector::from_iterator(r, order.iter().map(|&i| svd.singular_values[i].max(0.0)));
    let u = u.select_columns(&order);
    let v = v_t.select_rows(&order).transpose();
    Ok(SingularSpectrum { sigma, u, v })
}

/// Singular values only, sorted nonincreasing.
pub fn singular_values(a: &DMatrix<f64>) -> Result<Vec<f64>> {
    check_finite(a)?;
    if a.nrows().min(a.ncols()) == 0 {
        return Ok(Vec::new());
    }
    let mut sv: Vec<f64> = a.singular_values().iter().map(|s| s.max(0.0)).collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    Ok(sv)
}

pub fn numerical_rank(sigma: &[f64]) -> usize {
    let max = sigma.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    sigma.iter().filter(|&&s| s > RANK_TOLERANCE * max).count()
}

fn check_finite(a: &DMatrix<f64>) -> Result<()> {
    if a.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(GdmError::InvalidInput("matrix has non-finite entries".into()))
    }
}

/// The `delta = eps / (1 - eps)` exponent paired with `eps`.
pub fn conjugate_exponent(eps: f64) -> f64 {
    eps / (1.0 - eps)
}

/// `(sum x_i^q)^(1/q)` for nonnegative `x`, computed relative to `scale`.
///
/// Returns the quasi-norm of `x / scale`; callers divide matching norms so the
/// scale cancels.
pub(crate) fn scaled_power_norm(x: &[f64], q: f64, scale: f64) -> f64 {
    if q.is_infinite() {
        return x.iter().copied().fold(0.0, f64::max) / scale;
    }
    let s: f64 = x.iter().filter(|&&v| v > 0.0).map(|&v| (v / scale).powf(q)).sum();
    s.powf(1.0 / q)
}

/// Empirical dimension of a singular spectrum.
///
/// Values at or below `RANK_TOLERANCE * max(sigma)` are roundoff from the
/// decomposition and are flushed to zero; with `eps < 1` their fractional
/// powers would otherwise inflate the estimate of an exactly low-rank set.
pub fn empirical_dimension(sigma: &[f64], eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(GdmError::InvalidParameter(format!("eps must lie in (0, 1], got {eps}")));
    }
    if sigma.iter().any(|s| !s.is_finite() || *s < 0.0) {
        return Err(GdmError::InvalidInput("singular values must be finite and nonnegative".into()));
    }
    let max = sigma.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return Err(GdmError::DegenerateSpectrum);
    }
    let delta = if eps == 1.0 { f64::INFINITY } else { conjugate_exponent(eps) };
    let floor = RANK_TOLERANCE * max;
    let kept: Vec<f64> = sigma.iter().map(|&s| if s > floor { s } else { 0.0 }).collect();
    Ok(scaled_power_norm(&kept, eps, max) / scaled_power_norm(&kept, delta, max))
}

/// Empirical dimension of the columns of `a`.
pub fn empirical_dimension_of(a: &DMatrix<f64>, eps: f64) -> Result<f64> {
    empirical_dimension(&singular_values(a)?, eps)
}

/// Smallest `p` for which the natural partition of `k` equal `d`-dimensional
/// subspaces uniquely minimizes true-dimension global dimension:
/// `ln(k) / (ln(d + 1) - ln(d))`.
pub fn p_lower_bound(k: usize, d: usize) -> Result<f64> {
    if k < 2 {
        return Err(GdmError::InvalidParameter(format!("K must be at least 2, got {k}")));
    }
    if d < 1 {
        return Err(GdmError::InvalidParameter("d must be at least 1".into()));
    }
    let (k, d) = (k as f64, d as f64);
    Ok(k.ln() / ((d + 1.0).ln() - d.ln()))
}
