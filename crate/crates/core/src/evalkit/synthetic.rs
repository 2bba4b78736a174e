use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::embedding::DataMatrix;
use crate::error::{GdmError, Result};
use crate::optimizer::Partition;

/// Mixture of random linear subspaces plus uniform-ball outliers.
///
/// The cluster count is `dims.len()`; `points_per_cluster` must match it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub dims: Vec<usize>,
    pub ambient: usize,
    pub points_per_cluster: Vec<usize>,
    pub noise_sigma: f64,
    pub outlier_count: usize,
    pub outlier_radius: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    /// Noiseless clusters of equal size without outliers.
    pub fn new(ambient: usize, dims: Vec<usize>, per_cluster: usize, seed: u64) -> Self {
        let points_per_cluster = vec![per_cluster; dims.len()];
        Self { dims, ambient, points_per_cluster, noise_sigma: 0.0, outlier_count: 0, outlier_radius: 1.0, seed }
    }

    pub fn with_noise(mut self, sigma: f64) -> Self {
        self.noise_sigma = sigma;
        self
    }

    pub fn with_outliers(mut self, count: usize, radius: f64) -> Self {
        self.outlier_count = count;
        self.outlier_radius = radius;
        self
    }

    pub fn k(&self) -> usize {
        self.dims.len()
    }

    pub fn inlier_count(&self) -> usize {
        self.points_per_cluster.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(GdmError::InvalidParameter(msg));
        if self.dims.is_empty() {
            return bad("at least one cluster is required".into());
        }
        if self.points_per_cluster.len() != self.dims.len() {
            return bad(format!("{} cluster sizes for {} clusters", self.points_per_cluster.len(), self.dims.len()));
        }
        for (k, (&d, &n)) in self.dims.iter().zip(&self.points_per_cluster).enumerate() {
            if d == 0 || d >= self.ambient {
                return bad(format!("cluster {k}: dimension {d} must lie in [1, {})", self.ambient));
            }
            if n <= d {
                return bad(format!("cluster {k}: {n} points cannot span dimension {d}"));
            }
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad(format!("noise sigma must be nonnegative, got {}", self.noise_sigma));
        }
        if self.outlier_count > 0 && !(self.outlier_radius > 0.0 && self.outlier_radius.is_finite()) {
            return bad(format!("outlier radius must be positive, got {}", self.outlier_radius));
        }
        Ok(())
    }
}

fn gaussian_vector<R: Rng>(rng: &mut R, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

/// Uniform sample from the ball of radius `r` in `R^n`.
pub(crate) fn ball_point<R: Rng>(rng: &mut R, n: usize, r: f64) -> DVector<f64> {
    let dir = loop {
        let g = gaussian_vector(rng, n);
        let norm = g.norm();
        if norm > 1e-12 {
            break g / norm;
        }
    };
    dir * (r * rng.random::<f64>().powf(1.0 / n as f64))
}

/// Inliers come first in cluster order, outliers last. Outliers carry label 0
/// in the returned partition.
pub fn sample_subspace_mixture(spec: &SyntheticSpec) -> Result<(DataMatrix, Partition)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let d_amb = spec.ambient;
    let mut columns = Vec::with_capacity(spec.inlier_count() + spec.outlier_count);
    let mut labels = Vec::with_capacity(columns.capacity());

    for (k, (&d, &n)) in spec.dims.iter().zip(&spec.points_per_cluster).enumerate() {
        let raw = DMatrix::from_fn(d_amb, d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let basis = raw.qr().q();
        for _ in 0..n {
            let mut v = &basis * gaussian_vector(&mut rng, d);
            if spec.noise_sigma > 0.0 {
                v += gaussian_vector(&mut rng, d_amb) * spec.noise_sigma;
            }
            columns.push(v);
            labels.push(k);
        }
    }
    let first_outlier = columns.len();
    for _ in 0..spec.outlier_count {
        columns.push(ball_point(&mut rng, d_amb, spec.outlier_radius));
        labels.push(0);
    }
    let truth = Partition::new(labels, spec.k())?.with_outliers(first_outlier..columns.len());
    Ok((DataMatrix::from_columns(&columns)?, truth))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dimension::{empirical_dimension_of, numerical_rank, singular_values};

    #[test]
    fn single_cluster_rank() {
        let (a, truth) = sample_subspace_mixture(&SyntheticSpec::new(9, vec![2], 40, 3)).unwrap();
        assert_eq!(a.len(), 40);
        assert!(truth.outliers().is_empty());
        assert_eq!(numerical_rank(&singular_values(a.matrix()).unwrap()), 2);
    }

    #[test]
    fn seeded_output_repeats() {
        let spec = SyntheticSpec::new(5, vec![1, 2], 10, 9).with_noise(0.1).with_outliers(4, 2.0);
        let (a1, t1) = sample_subspace_mixture(&spec).unwrap();
        let (a2, t2) = sample_subspace_mixture(&spec).unwrap();
        assert_eq!(a1, a2);
        assert_eq!(t1, t2);
        assert_eq!(t1.outliers().iter().copied().collect::<Vec<_>>(), vec![20, 21, 22, 23]);
        for j in 20..24 {
            assert!(a1.matrix().column(j).norm() <= 2.0);
        }
    }

    #[test]
    fn cluster_dimensions_near_truth() {
        let spec = SyntheticSpec::new(9, vec![1, 2, 3], 200, 5);
        let (a, truth) = sample_subspace_mixture(&spec).unwrap();
        for (k, idx) in truth.members().iter().enumerate() {
            let d = empirical_dimension_of(&a.select(idx), 0.35).unwrap();
            let target = spec.dims[k] as f64;
            assert!(d <= target + 1e-9 && d >= target - 0.3, "cluster {k}: {d}");
        }
    }

    #[test]
    fn invalid_specs() {
        assert!(SyntheticSpec::new(3, vec![3], 10, 0).validate().is_err());
        assert!(SyntheticSpec::new(3, vec![2], 2, 0).validate().is_err());
        assert!(SyntheticSpec::new(3, vec![], 2, 0).validate().is_err());
        assert!(SyntheticSpec::new(3, vec![1], 5, 0).with_noise(-1.0).validate().is_err());
    }
}
