//! JSON report written by `gdm segment`.

use gdm_core::robust::{KappaRule, OutlierConfig, OutlierMode};
use gdm_core::{EmbeddingMode, GdmConfig};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

/// Every setting that influences a run. Feeding it back through
/// `segment --config` repeats the run exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub k: usize,
    pub epsilon: f64,
    pub p: f64,
    pub restarts: usize,
    pub grad_iters: usize,
    pub genetic_passes: usize,
    pub step: f64,
    pub merge_candidates: usize,
    pub embedding: EmbeddingMode,
    pub normalize: bool,
    pub outlier_mode: OutlierMode,
    pub alpha: f64,
    pub fraction: f64,
    pub kappa: f64,
    /// When set, replaces `kappa` by a per-cluster `mean + r * std` threshold.
    pub adaptive_kappa: Option<f64>,
    pub seed: u64,
}

impl RunConfig {
    pub fn gdm_config(&self) -> GdmConfig {
        GdmConfig {
            k: self.k,
            eps: self.epsilon,
            p: self.p,
            restarts: self.restarts,
            grad_iters: self.grad_iters,
            genetic_passes: self.genetic_passes,
            step_target: self.step,
            merge_candidates: self.merge_candidates,
            seed: self.seed,
            parallel: true,
        }
    }

    pub fn outlier_config(&self) -> OutlierConfig {
        OutlierConfig {
            mode: self.outlier_mode,
            alpha: self.alpha,
            fraction: self.fraction,
            kappa: match self.adaptive_kappa {
                Some(r) => KappaRule::Adaptive { r },
                None => KappaRule::Fixed(self.kappa),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Percent of mislabeled points among those that are inliers in both labelings.
    pub misclassification: f64,
    pub tpr: f64,
    pub fpr: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub input: String,
    pub config: RunConfig,
    /// 1-based cluster of every point; outliers keep their nearest cluster.
    pub labels: Vec<usize>,
    pub outliers: Vec<bool>,
    pub gd_value: f64,
    pub cluster_dims: Vec<f64>,
    pub wall_time_secs: f64,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub metrics: Option<Metrics>,
}

impl RunReport {
    /// Plain label file contents: one label per line, 0 for outliers.
    pub fn label_lines(&self) -> String {
        self.labels.iter().zip(&self.outliers).map(|(&l, &o)| format!("{}\n", if o { 0 } else { l })).collect()
    }
}
