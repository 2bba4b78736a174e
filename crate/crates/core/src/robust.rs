//! Outlier detection and rejection on top of global dimension minimization.
//!
//! All pipelines start from the augmented objective in which membership row 0
//! is an outlier group with a fixed unit cost. Thresholding that membership
//! directly (naive mode) is sensitive to the cost, so the two practical
//! pipelines only use the *ranking* of points by outlier membership:
//!
//! - known fraction: reject the most outlying fraction, re-segment the rest;
//! - model reassign: fit a subspace to each resulting cluster, then relabel
//!   every point by its nearest subspace and reject points farther than `kappa`.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dimension::{empirical_dimension, thin_svd};
use crate::embedding::DataMatrix;
use crate::error::{GdmError, Result};
use crate::objective::{hard_cluster_dimensions, p_norm, DegeneratePolicy, MembershipMatrix, DEGENERATE_SIGMA};
use crate::optimizer::{
    descend_with, for_each_restart, gdm, merge_init_for_restart, DescentObjective, GdmConfig, Partition,
    SegmentationResult,
};

/// Outlier unit cost used by the known-fraction core.
pub const KNOWN_FRACTION_ALPHA: f64 = 0.01;
/// Default rejected fraction.
pub const DEFAULT_FRACTION: f64 = 0.20;
/// Default distance threshold for model reassignment.
pub const DEFAULT_KAPPA: f64 = 0.05;
/// Initial outlier-row mass given to every point.
pub const OUTLIER_PRIOR: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutlierMode {
    #[default]
    None,
    /// Threshold the augmented membership directly. Unreliable: which points
    /// land in the outlier group depends strongly on `alpha`.
    Naive,
    KnownFraction,
    ModelReassign,
}

/// Distance threshold rule for model reassignment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KappaRule {
    Fixed(f64),
    /// Per cluster `mean + r * std` of the inlier residuals.
    Adaptive {
        r: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierConfig {
    pub mode: OutlierMode,
    /// Outlier unit cost for naive mode.
    pub alpha: f64,
    pub fraction: f64,
    pub kappa: KappaRule,
}

impl Default for OutlierConfig {
    fn default() -> Self {
        Self {
            mode: OutlierMode::None,
            alpha: KNOWN_FRACTION_ALPHA,
            fraction: DEFAULT_FRACTION,
            kappa: KappaRule::Fixed(DEFAULT_KAPPA),
        }
    }
}

/// Orthonormal basis of a subspace fitted to one cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedSubspace {
    /// `D x dim`, orthonormal columns.
    pub basis: DMatrix<f64>,
    pub dim: usize,
}

/// Augmented-objective descent over `(K + 1)`-row memberships.
///
/// Each restart seeds its membership from the merge initialization with mass
/// `OUTLIER_PRIOR` on the outlier row; the restart with the lowest final
/// augmented objective is returned, before any thresholding.
pub fn gdm_outlier_core(a: &DataMatrix, cfg: &GdmConfig, alpha: f64) -> Result<MembershipMatrix> {
    cfg.validate()?;
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(GdmError::InvalidParameter(format!("alpha must be nonnegative, got {alpha}")));
    }
    if a.len() <= cfg.k {
        return Err(GdmError::InvalidInput(format!("need more than K = {} points, got {}", cfg.k, a.len())));
    }
    if cfg.restarts == 0 {
        return Err(GdmError::InvalidParameter("at least one restart is required".into()));
    }
    let objective = DescentObjective::Outlier { alpha };
    let outcomes = for_each_restart(cfg, |r| -> Result<(f64, MembershipMatrix)> {
        let init = merge_init_for_restart(a, cfg, r);
        let m0 = seeded_membership(init.labels(), cfg.k);
        let (m, _) = descend_with(a, &m0, cfg, objective)?;
        let value = objective.value(a, &m, cfg)?;
        Ok((value, m))
    });
    let mut best: Option<(f64, MembershipMatrix)> = None;
    let mut last_err = None;
    for outcome in outcomes {
        match outcome {
            Ok(o) if best.as_ref().is_none_or(|b| o.0 < b.0) => best = Some(o),
            Ok(_) => {}
            Err(e) => last_err = Some(e),
        }
    }
    best.map(|(_, m)| m).ok_or_else(|| last_err.unwrap_or(GdmError::DegenerateCluster(0)))
}

fn seeded_membership(labels: &[usize], k: usize) -> MembershipMatrix {
    let mut m = DMatrix::zeros(k + 1, labels.len());
    for (j, &l) in labels.iter().enumerate() {
        m[(0, j)] = OUTLIER_PRIOR;
        m[(l + 1, j)] = 1.0 - OUTLIER_PRIOR;
    }
    MembershipMatrix::new(m).expect("columns sum to one")
}

/// Most likely true cluster of each point, ignoring the outlier row.
fn cluster_argmax(m: &MembershipMatrix) -> Vec<usize> {
    m.matrix()
        .column_iter()
        .map(|col| {
            let mut best = 1;
            for i in 2..col.len() {
                if col[i] > col[best] {
                    best = i;
                }
            }
            best - 1
        })
        .collect()
}

/// Points ordered by decreasing outlier-row membership (index order on ties).
pub fn outlier_ranking(m: &MembershipMatrix) -> Vec<usize> {
    let mut order: Vec<usize> = (0..m.num_points()).collect();
    order.sort_by(|&i, &j| m.get(0, j).total_cmp(&m.get(0, i)).then(i.cmp(&j)));
    order
}

fn lenient_summary(a: &DataMatrix, partition: &Partition, cfg: &GdmConfig) -> Result<(f64, Vec<f64>)> {
    let params = cfg.objective_params().with_policy(DegeneratePolicy::Zero);
    let dims = hard_cluster_dimensions(a, partition, &params)?;
    Ok((p_norm(&dims, cfg.p), dims))
}

/// Thresholds the augmented membership directly: the outlier row wins a
/// point only if it holds the largest membership.
pub fn gdm_naive(a: &DataMatrix, cfg: &GdmConfig, alpha: f64) -> Result<SegmentationResult> {
    let m = gdm_outlier_core(a, cfg, alpha)?;
    let labels = cluster_argmax(&m);
    let outliers = crate::optimizer::threshold(&m)
        .labels()
        .iter()
        .enumerate()
        .filter(|(_, &l)| l == 0)
        .map(|(i, _)| i)
        .collect::<Vec<_>>();
    let partition = Partition::new(labels, cfg.k)?.with_outliers(outliers);
    let (gd_value, per_cluster_dims) = lenient_summary(a, &partition, cfg)?;
    Ok(SegmentationResult {
        partition,
        gd_value,
        per_cluster_dims,
        membership: m,
        restarts_run: cfg.restarts,
        trace: Vec::new(),
        restart_values: Vec::new(),
    })
}

/// Known-fraction rejection with the default outlier cost.
pub fn known_fraction(a: &DataMatrix, cfg: &GdmConfig, fraction: f64) -> Result<SegmentationResult> {
    known_fraction_with_alpha(a, cfg, fraction, KNOWN_FRACTION_ALPHA)
}

/// Rejects the `ceil(fraction * N)` points with the most outlier membership
/// and segments the survivors with plain GDM (cold start).
///
/// The returned `membership` is the augmented `(K + 1) x N` membership used
/// for the ranking. Rejected points keep their most likely cluster as label.
pub fn known_fraction_with_alpha(
    a: &DataMatrix,
    cfg: &GdmConfig,
    fraction: f64,
    alpha: f64,
) -> Result<SegmentationResult> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(GdmError::InvalidParameter(format!("fraction must lie in (0, 1), got {fraction}")));
    }
    let n = a.len();
    let rejected = ((fraction * n as f64).ceil() as usize).min(n);
    let survivors = n - rejected;
    if survivors <= cfg.k {
        return Err(GdmError::InsufficientInliers { survivors, clusters: cfg.k });
    }
    let m = gdm_outlier_core(a, cfg, alpha)?;
    let ranking = outlier_ranking(&m);
    let outliers: BTreeSet<usize> = ranking[..rejected].iter().copied().collect();
    let kept: Vec<usize> = (0..n).filter(|i| !outliers.contains(i)).collect();

    let inner = gdm(&a.subset(&kept)?, cfg)?;
    let mut labels = cluster_argmax(&m);
    for (local, &global) in kept.iter().enumerate() {
        labels[global] = inner.partition.labels()[local];
    }
    let partition = Partition::new(labels, cfg.k)?.with_outliers(outliers);
    Ok(SegmentationResult {
        partition,
        gd_value: inner.gd_value,
        per_cluster_dims: inner.per_cluster_dims,
        membership: m,
        restarts_run: inner.restarts_run,
        trace: inner.trace,
        restart_values: inner.restart_values,
    })
}

/// Rounds half up, then clamps to `[1, min(D, N_k)]`.
pub fn rounded_dimension(d_hat: f64, max_dim: usize) -> usize {
    ((d_hat + 0.5).floor() as usize).clamp(1, max_dim.max(1))
}

/// Subspace spanned by the top `round(d_hat)` left singular vectors of a cluster.
pub fn fit_cluster_subspace(points: &DMatrix<f64>, eps: f64) -> Result<FittedSubspace> {
    if points.ncols() == 0 {
        return Err(GdmError::DegenerateCluster(0));
    }
    let svd = thin_svd(points)?;
    if svd.sigma_max() < DEGENERATE_SIGMA {
        return Err(GdmError::DegenerateCluster(0));
    }
    let d_hat = empirical_dimension(svd.sigma.as_slice(), eps)?;
    let dim = rounded_dimension(d_hat, points.nrows().min(points.ncols()));
    Ok(FittedSubspace { basis: svd.u.columns(0, dim).into_owned(), dim })
}

/// `||v - B B^T v||`.
pub fn point_subspace_distance(v: &DVector<f64>, s: &FittedSubspace) -> f64 {
    let coeffs = s.basis.transpose() * v;
    (v - &s.basis * coeffs).norm()
}

/// Subspaces fitted after known-fraction rejection, with every point's
/// nearest subspace and distance to it. Thresholds can be applied repeatedly
/// without re-optimizing.
#[derive(Debug, Clone)]
pub struct Reassignment {
    pub base: SegmentationResult,
    pub subspaces: Vec<FittedSubspace>,
    pub nearest: Vec<usize>,
    pub distances: Vec<f64>,
    /// Per-cluster `(mean, std)` of distances over known-fraction inliers.
    pub residual_stats: Vec<(f64, f64)>,
    k: usize,
}

impl Reassignment {
    pub fn compute(a: &DataMatrix, cfg: &GdmConfig, fraction: f64) -> Result<Self> {
        let base = known_fraction(a, cfg, fraction)?;
        let subspaces = base
            .partition
            .members()
            .iter()
            .enumerate()
            .map(|(k, idx)| fit_cluster_subspace(&a.select(idx), cfg.eps).map_err(|_| GdmError::DegenerateCluster(k)))
            .collect::<Result<Vec<_>>>()?;

        let mut nearest = Vec::with_capacity(a.len());
        let mut distances = Vec::with_capacity(a.len());
        for col in a.matrix().column_iter() {
            let v = col.into_owned();
            let (k, d) = subspaces
                .iter()
                .map(|s| point_subspace_distance(&v, s))
                .enumerate()
                .fold((0, f64::INFINITY), |best, (k, d)| if d < best.1 { (k, d) } else { best });
            nearest.push(k);
            distances.push(d);
        }

        let residual_stats = (0..cfg.k)
            .map(|k| {
                let r: Vec<f64> = (0..a.len())
                    .filter(|&i| nearest[i] == k && !base.partition.is_outlier(i))
                    .map(|i| distances[i])
                    .collect();
                if r.is_empty() {
                    return (0.0, 0.0);
                }
                let mean = r.iter().sum::<f64>() / r.len() as f64;
                let var = r.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / r.len() as f64;
                (mean, var.sqrt())
            })
            .collect();
        Ok(Self { base, subspaces, nearest, distances, residual_stats, k: cfg.k })
    }

    /// Nearest-subspace labels with points beyond the threshold rejected.
    pub fn partition(&self, rule: KappaRule) -> Partition {
        let outliers = (0..self.distances.len()).filter(|&i| {
            let limit = match rule {
                KappaRule::Fixed(kappa) => kappa,
                KappaRule::Adaptive { r } => {
                    let (mean, std) = self.residual_stats[self.nearest[i]];
                    mean + r * std
                }
            };
            self.distances[i] > limit
        });
        Partition::new(self.nearest.clone(), self.k).expect("nearest index below K").with_outliers(outliers)
    }

    pub fn segmentation(&self, a: &DataMatrix, cfg: &GdmConfig, rule: KappaRule) -> Result<SegmentationResult> {
        let partition = self.partition(rule);
        let (gd_value, per_cluster_dims) = lenient_summary(a, &partition, cfg)?;
        Ok(SegmentationResult { partition, gd_value, per_cluster_dims, ..self.base.clone() })
    }
}

/// Model reassignment with the default rejected fraction and a fixed `kappa`.
pub fn model_reassign(a: &DataMatrix, cfg: &GdmConfig, kappa: f64) -> Result<SegmentationResult> {
    if kappa.is_nan() || kappa <= 0.0 {
        return Err(GdmError::InvalidParameter(format!("kappa must be positive, got {kappa}")));
    }
    Reassignment::compute(a, cfg, DEFAULT_FRACTION)?.segmentation(a, cfg, KappaRule::Fixed(kappa))
}

/// Dispatches on `outlier.mode`.
pub fn segment(a: &DataMatrix, cfg: &GdmConfig, outlier: &OutlierConfig) -> Result<SegmentationResult> {
    match outlier.mode {
        OutlierMode::None => gdm(a, cfg),
        OutlierMode::Naive => gdm_naive(a, cfg, outlier.alpha),
        OutlierMode::KnownFraction => known_fraction(a, cfg, outlier.fraction),
        OutlierMode::ModelReassign => {
            if let KappaRule::Fixed(kappa) = outlier.kappa {
                if kappa.is_nan() || kappa <= 0.0 {
                    return Err(GdmError::InvalidParameter(format!("kappa must be positive, got {kappa}")));
                }
            }
            Reassignment::compute(a, cfg, outlier.fraction)?.segmentation(a, cfg, outlier.kappa)
        }
    }
}

/// True and false positive rates in percent.
///
/// TPR is 0 when there are no true outliers; FPR is 0 when there are no true inliers.
pub fn tpr_fpr(predicted: &BTreeSet<usize>, truth: &BTreeSet<usize>, n: usize) -> (f64, f64) {
    let hits = predicted.intersection(truth).count();
    let false_alarms = predicted.iter().filter(|&&i| i < n && !truth.contains(&i)).count();
    let inliers = n - truth.len();
    let tpr = if truth.is_empty() { 0.0 } else { hits as f64 / truth.len() as f64 * 100.0 };
    let fpr = if inliers == 0 { 0.0 } else { false_alarms as f64 / inliers as f64 * 100.0 };
    (tpr, fpr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rates_examples() {
        let truth: BTreeSet<usize> = (0..10).collect();
        assert_eq!(tpr_fpr(&truth, &truth, 100), (100.0, 0.0));
        assert_eq!(tpr_fpr(&BTreeSet::new(), &truth, 100), (0.0, 0.0));
        let pred: BTreeSet<usize> = (0..7).chain(50..53).collect();
        let (tpr, fpr) = tpr_fpr(&pred, &truth, 100);
        assert_abs_diff_eq!(tpr, 70.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fpr, 300.0 / 90.0, epsilon = 1e-12);
        assert_eq!(tpr_fpr(&pred, &BTreeSet::new(), 100).0, 0.0);
    }

    #[test]
    fn rounding_rule() {
        assert_eq!(rounded_dimension(2.5, 9), 3);
        assert_eq!(rounded_dimension(2.49, 9), 2);
        assert_eq!(rounded_dimension(0.7, 9), 1);
        assert_eq!(rounded_dimension(8.9, 4), 4);
    }

    #[test]
    fn rank_one_cluster_fit() {
        let dir = DVector::from_vec(vec![1.0, 2.0, 2.0]) / 3.0;
        let pts = DMatrix::from_columns(&[&dir * 2.0, &dir * -1.0, &dir * 5.0]);
        let s = fit_cluster_subspace(&pts, 0.35).unwrap();
        assert_eq!(s.dim, 1);
        assert!(point_subspace_distance(&(&dir * 7.0), &s) < 1e-12);
        assert!(fit_cluster_subspace(&DMatrix::zeros(3, 4), 0.35).is_err());
    }

    #[test]
    fn distance_examples() {
        let basis = DMatrix::from_column_slice(3, 2, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let s = FittedSubspace { basis, dim: 2 };
        assert_eq!(point_subspace_distance(&DVector::from_vec(vec![3.0, -1.0, 0.0]), &s), 0.0);
        assert_eq!(point_subspace_distance(&DVector::from_vec(vec![0.0, 0.0, -2.0]), &s), 2.0);
    }

    #[test]
    fn distance_matches_least_squares() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let raw = DMatrix::from_fn(9, 3, |_, _| rng.random_range(-1.0..1.0));
            let s = FittedSubspace { basis: raw.clone().qr().q(), dim: 3 };
            let v = DVector::from_fn(9, |_, _| rng.random_range(-2.0..2.0));
            // Independent route: normal equations on the raw spanning set.
            let coeffs = (raw.transpose() * &raw).lu().solve(&(raw.transpose() * &v)).unwrap();
            let oracle = (&v - &raw * coeffs).norm();
            assert_abs_diff_eq!(point_subspace_distance(&v, &s), oracle, epsilon = 1e-10);
        }
    }

    #[test]
    fn fraction_validation() {
        let a = DataMatrix::new(DMatrix::from_fn(3, 6, |i, j| (i + j) as f64)).unwrap();
        let cfg = GdmConfig::new(2, 0);
        assert!(matches!(known_fraction(&a, &cfg, 0.0), Err(GdmError::InvalidParameter(_))));
        assert!(matches!(known_fraction(&a, &cfg, 0.7), Err(GdmError::InsufficientInliers { .. })));
        assert!(matches!(model_reassign(&a, &cfg, 0.0), Err(GdmError::InvalidParameter(_))));
    }
}
