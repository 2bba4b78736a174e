//! Single-point reassignment sweeps ("genetic" clean-up).

use super::sketch::{set_dimension, Sketch};
use super::{GdmConfig, Partition};
use crate::embedding::DataMatrix;

/// Moves smaller than this relative gain are treated as ties and rejected.
const MIN_GAIN: f64 = 1e-12;

struct Cluster {
    members: Vec<usize>,
    sketch: Sketch,
    power: f64,
}

impl Cluster {
    fn build(a: &DataMatrix, members: Vec<usize>, eps: f64, p: f64) -> Self {
        let sketch = Sketch::from_columns(a.matrix(), &members);
        let power = sketch.dimension(eps).powf(p);
        Self { members, sketch, power }
    }
}

/// Up to `cfg.genetic_passes` sweeps over the points in index order. Each
/// point is tentatively moved to every other cluster and the move with the
/// lowest hard global dimension is kept if it strictly lowers it. Moves that
/// would empty a cluster are skipped, outliers stay put, and a sweep without
/// changes ends the refinement.
pub fn genetic_refine(a: &DataMatrix, part: &Partition, cfg: &GdmConfig) -> Partition {
    let eps = cfg.eps;
    let p = cfg.p;
    let k = part.num_clusters();
    let mut labels = part.labels().to_vec();
    let mut clusters: Vec<Cluster> =
        part.members().into_iter().map(|members| Cluster::build(a, members, eps, p)).collect();

    for _ in 0..cfg.genetic_passes {
        let mut changed = false;
        for (n, point) in a.matrix().column_iter().enumerate() {
            if part.is_outlier(n) {
                continue;
            }
            let from = labels[n];
            if clusters[from].members.len() <= 1 {
                continue;
            }
            let total: f64 = clusters.iter().map(|c| c.power).sum();
            let remaining: Vec<usize> = clusters[from].members.iter().copied().filter(|&j| j != n).collect();
            let from_power = set_dimension(&a.select(&remaining), eps).powf(p);

            let mut best: Option<(f64, usize, Sketch, f64)> = None;
            for to in (0..k).filter(|&to| to != from) {
                let grown = clusters[to].sketch.with_point(point.as_slice());
                let to_power = grown.dimension(eps).powf(p);
                let candidate = total - clusters[from].power - clusters[to].power + from_power + to_power;
                if best.as_ref().is_none_or(|b| candidate < b.0) {
                    best = Some((candidate, to, grown, to_power));
                }
            }
            let Some((candidate, to, grown, to_power)) = best else { continue };
            if candidate < total * (1.0 - MIN_GAIN) {
                labels[n] = to;
                clusters[to].members.push(n);
                clusters[to].sketch = grown;
                clusters[to].power = to_power;
                clusters[from] = Cluster::build(a, remaining, eps, p);
                debug_assert!((clusters[from].power - from_power).abs() <= 1e-9 * from_power.max(1.0));
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    Partition::new(labels, k).expect("labels stay in range").with_outliers(part.outliers().iter().copied())
}
