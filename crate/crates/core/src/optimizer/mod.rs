//! Global dimension minimization: merge initialization, projected gradient
//! descent on the membership matrix, thresholding, single-point refinement
//! and selection of the best of several restarts.

mod descent;
mod init;
mod refine;
mod simplex;
pub(crate) mod sketch;

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use descent::{descend, descend_with, DescentObjective};
pub use refine::genetic_refine;
pub use simplex::project_simplex;

use crate::embedding::DataMatrix;
use crate::error::{GdmError, Result};
use crate::objective::{
    global_dimension_hard, hard_cluster_dimensions, DegeneratePolicy, MembershipMatrix, ObjectiveParams,
};

/// Tunables of the optimizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GdmConfig {
    /// Number of clusters `K`.
    pub k: usize,
    pub eps: f64,
    pub p: f64,
    /// Independent restarts (`n1`).
    pub restarts: usize,
    /// Projected gradient iterations per restart (`n2`).
    pub grad_iters: usize,
    /// Reassignment sweeps per restart (`n3`).
    pub genetic_passes: usize,
    /// Average displacement of the most affected membership columns per step.
    pub step_target: f64,
    /// Pairs sampled per merge round during initialization.
    pub merge_candidates: usize,
    pub seed: u64,
    /// Run restarts on the rayon pool. The selected result does not depend on it.
    pub parallel: bool,
}

impl Default for GdmConfig {
    fn default() -> Self {
        Self {
            k: 2,
            eps: 0.35,
            p: 15.0,
            restarts: 10,
            grad_iters: 30,
            genetic_passes: 10,
            step_target: 0.3,
            merge_candidates: 100,
            seed: 0,
            parallel: true,
        }
    }
}

impl GdmConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        Self { k, seed, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(GdmError::InvalidParameter("K must be at least 1".into()));
        }
        if !(self.step_target > 0.0 && self.step_target.is_finite()) {
            return Err(GdmError::InvalidParameter(format!("step target must be positive, got {}", self.step_target)));
        }
        if self.merge_candidates == 0 {
            return Err(GdmError::InvalidParameter("merge candidates must be positive".into()));
        }
        self.objective_params().validate()
    }

    /// Objective parameters used inside the optimizer, where emptied
    /// clusters count as dimension 0.
    pub fn objective_params(&self) -> ObjectiveParams {
        ObjectiveParams { eps: self.eps, p: self.p, alpha: 0.0, degenerate: DegeneratePolicy::Zero }
    }

    /// Independent random stream for one restart.
    pub(crate) fn restart_rng(&self, restart: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(restart as u64);
        rng
    }
}

/// Hard labeling of `N` points into `K` clusters with an optional set of
/// rejected points. Labels are 0-based; outliers keep a label (their nearest
/// or most likely cluster) but are excluded from cluster membership.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    labels: Vec<usize>,
    num_clusters: usize,
    outliers: BTreeSet<usize>,
}

impl Partition {
    pub fn new(labels: Vec<usize>, num_clusters: usize) -> Result<Self> {
        if let Some(&bad) = labels.iter().find(|&&l| l >= num_clusters) {
            return Err(GdmError::InvalidParameter(format!("label {bad} out of range for {num_clusters} clusters")));
        }
        Ok(Self { labels, num_clusters, outliers: BTreeSet::new() })
    }

    /// Marks points as outliers; indices past the end are ignored.
    pub fn with_outliers(mut self, outliers: impl IntoIterator<Item = usize>) -> Self {
        let n = self.labels.len();
        self.outliers = outliers.into_iter().filter(|&i| i < n).collect();
        self
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_clusters(&self) -> usize {
        self.num_clusters
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn outliers(&self) -> &BTreeSet<usize> {
        &self.outliers
    }

    pub fn is_outlier(&self, i: usize) -> bool {
        self.outliers.contains(&i)
    }

    /// Indices of the non-outlier points of each cluster.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_clusters];
        for (i, &l) in self.labels.iter().enumerate() {
            if !self.outliers.contains(&i) {
                out[l].push(i);
            }
        }
        out
    }

    /// Same partition with cluster `c` renamed to `perm[c]`.
    pub fn relabeled(&self, perm: &[usize]) -> Result<Self> {
        let labels = self.labels.iter().map(|&l| perm[l]).collect();
        Ok(Self::new(labels, self.num_clusters)?.with_outliers(self.outliers.iter().copied()))
    }

    /// Labels of the points that are not outliers.
    pub fn inlier_labels(&self) -> Vec<(usize, usize)> {
        self.labels.iter().copied().enumerate().filter(|(i, _)| !self.outliers.contains(i)).collect()
    }
}

/// Outcome of [`gdm`] and the robust pipelines built on it.
#[derive(Debug, Clone)]
pub struct SegmentationResult {
    pub partition: Partition,
    /// Hard global dimension of `partition` (outliers excluded).
    pub gd_value: f64,
    pub per_cluster_dims: Vec<f64>,
    /// Soft membership of the winning restart after descent.
    pub membership: MembershipMatrix,
    pub restarts_run: usize,
    /// Objective values along the winning restart's descent.
    pub trace: Vec<f64>,
    /// Final hard global dimension of every restart; `None` if it failed.
    pub restart_values: Vec<Option<f64>>,
}

/// Assigns each point to the row with the largest membership, lowest row on ties.
pub fn threshold(m: &MembershipMatrix) -> Partition {
    let labels = m
        .matrix()
        .column_iter()
        .map(|col| {
            let mut best = 0;
            for (i, &v) in col.iter().enumerate() {
                if v > col[best] {
                    best = i;
                }
            }
            best
        })
        .collect();
    Partition::new(labels, m.num_rows()).expect("argmax below row count")
}

/// Agglomerative initialization seeded from `cfg.seed`.
pub fn greedy_merge_init(a: &DataMatrix, cfg: &GdmConfig) -> Result<Partition> {
    cfg.validate()?;
    Ok(init::merge_init(a, cfg, &mut cfg.restart_rng(0)))
}

pub(crate) fn merge_init_for_restart(a: &DataMatrix, cfg: &GdmConfig, restart: usize) -> Partition {
    init::merge_init(a, cfg, &mut cfg.restart_rng(restart))
}

struct RestartOutcome {
    partition: Partition,
    gd_value: f64,
    membership: MembershipMatrix,
    trace: Vec<f64>,
}

fn run_restart(a: &DataMatrix, cfg: &GdmConfig, restart: usize) -> Result<RestartOutcome> {
    let init = merge_init_for_restart(a, cfg, restart);
    let m0 = MembershipMatrix::indicator(init.labels(), cfg.k)?;
    let (membership, trace) = descend_with(a, &m0, cfg, DescentObjective::Standard)?;
    let refined = genetic_refine(a, &threshold(&membership), cfg);
    let strict = ObjectiveParams { degenerate: DegeneratePolicy::Error, ..cfg.objective_params() };
    let gd_value = global_dimension_hard(a, &refined, &strict)?;
    Ok(RestartOutcome { partition: refined, gd_value, membership, trace })
}

/// Runs `f` for every restart, in parallel when configured, preserving order.
pub(crate) fn for_each_restart<T: Send>(cfg: &GdmConfig, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    if cfg.parallel {
        (0..cfg.restarts).into_par_iter().map(f).collect()
    } else {
        (0..cfg.restarts).map(f).collect()
    }
}

/// Global dimension minimization with `cfg.restarts` independent restarts.
///
/// The winner is the restart with the lowest hard global dimension, the
/// earliest one on ties, so the result is identical with or without
/// parallelism.
pub fn gdm(a: &DataMatrix, cfg: &GdmConfig) -> Result<SegmentationResult> {
    cfg.validate()?;
    let n = a.len();
    if cfg.k == 1 {
        return single_cluster(a, cfg);
    }
    if n <= cfg.k {
        return Err(GdmError::InvalidInput(format!("need more than K = {} points, got {n}", cfg.k)));
    }
    if cfg.restarts == 0 {
        return Err(GdmError::InvalidParameter("at least one restart is required".into()));
    }

    let outcomes = for_each_restart(cfg, |r| run_restart(a, cfg, r));
    let restart_values: Vec<Option<f64>> = outcomes.iter().map(|o| o.as_ref().ok().map(|o| o.gd_value)).collect();
    let mut best: Option<RestartOutcome> = None;
    let mut last_err = None;
    for outcome in outcomes {
        match outcome {
            Ok(o) => {
                if best.as_ref().is_none_or(|b| o.gd_value < b.gd_value) {
                    best = Some(o);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    let Some(best) = best else {
        return Err(last_err.unwrap_or(GdmError::DegenerateCluster(0)));
    };
    let strict = ObjectiveParams { degenerate: DegeneratePolicy::Error, ..cfg.objective_params() };
    let per_cluster_dims = hard_cluster_dimensions(a, &best.partition, &strict)?;
    Ok(SegmentationResult {
        partition: best.partition,
        gd_value: best.gd_value,
        per_cluster_dims,
        membership: best.membership,
        restarts_run: cfg.restarts,
        trace: best.trace,
        restart_values,
    })
}

fn single_cluster(a: &DataMatrix, cfg: &GdmConfig) -> Result<SegmentationResult> {
    let partition = Partition::new(vec![0; a.len()], 1)?;
    let strict = ObjectiveParams { degenerate: DegeneratePolicy::Error, ..cfg.objective_params() };
    let dims = hard_cluster_dimensions(a, &partition, &strict)?;
    Ok(SegmentationResult {
        gd_value: dims[0],
        per_cluster_dims: dims,
        membership: MembershipMatrix::new_unchecked(DMatrix::from_element(1, a.len(), 1.0)),
        partition,
        restarts_run: 0,
        trace: Vec::new(),
        restart_values: Vec::new(),
    })
}
