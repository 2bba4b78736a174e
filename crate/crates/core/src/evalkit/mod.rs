//! Synthetic data generators, segmentation metrics and ROC sweeps.

mod metrics;
mod scene;
mod synthetic;

pub use metrics::{misclassification_rate, MAX_MATCHED_CLUSTERS};
pub use scene::{sample_two_view_scene, TwoViewScene, TwoViewSpec};
pub use synthetic::{sample_subspace_mixture, SyntheticSpec};

use serde::{Deserialize, Serialize};

use crate::embedding::DataMatrix;
use crate::error::{GdmError, Result};
use crate::optimizer::{GdmConfig, Partition};
use crate::robust::{tpr_fpr, KappaRule, Reassignment, DEFAULT_FRACTION};

/// One threshold of an outlier ROC curve; rates in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub kappa: f64,
    pub tpr: f64,
    pub fpr: f64,
}

/// Model-reassign ROC curve over `kappa_grid` with the default rejected fraction.
pub fn roc_sweep(a: &DataMatrix, cfg: &GdmConfig, truth: &Partition, kappa_grid: &[f64]) -> Result<Vec<RocPoint>> {
    if kappa_grid.is_empty() {
        return Err(GdmError::InvalidParameter("kappa grid is empty".into()));
    }
    roc_curve(&Reassignment::compute(a, cfg, DEFAULT_FRACTION)?, truth, kappa_grid)
}

/// Applies every threshold to already fitted subspaces.
pub fn roc_curve(fit: &Reassignment, truth: &Partition, kappa_grid: &[f64]) -> Result<Vec<RocPoint>> {
    if truth.len() != fit.distances.len() {
        return Err(GdmError::InvalidInput(format!(
            "truth has {} points, data has {}",
            truth.len(),
            fit.distances.len()
        )));
    }
    kappa_grid
        .iter()
        .map(|&kappa| {
            if kappa.is_nan() || kappa < 0.0 {
                return Err(GdmError::InvalidParameter(format!("kappa must be nonnegative, got {kappa}")));
            }
            let predicted = fit.partition(KappaRule::Fixed(kappa));
            let (tpr, fpr) = tpr_fpr(predicted.outliers(), truth.outliers(), truth.len());
            Ok(RocPoint { kappa, tpr, fpr })
        })
        .collect()
}
