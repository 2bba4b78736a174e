use itertools::Itertools;

use crate::error::{GdmError, Result};
use crate::optimizer::Partition;

/// Largest label count handled by the exhaustive permutation search.
pub const MAX_MATCHED_CLUSTERS: usize = 6;

/// Percentage of mislabeled points under the best matching of predicted to
/// true labels.
///
/// Points flagged as outliers in either partition are left out, so rejected
/// inliers show up only in the false positive rate. Returns 0 when nothing
/// is left to compare.
pub fn misclassification_rate(pred: &Partition, truth: &Partition) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(GdmError::InvalidInput(format!("partitions differ in length: {} vs {}", pred.len(), truth.len())));
    }
    let k = pred.num_clusters().max(truth.num_clusters());
    if k > MAX_MATCHED_CLUSTERS {
        return Err(GdmError::Unsupported(format!(
            "label matching supports at most {MAX_MATCHED_CLUSTERS} clusters, got {k}"
        )));
    }
    let mut confusion = vec![vec![0usize; k]; k];
    let mut counted = 0;
    for (i, (&p, &t)) in pred.labels().iter().zip(truth.labels()).enumerate() {
        if pred.is_outlier(i) || truth.is_outlier(i) {
            continue;
        }
        confusion[p][t] += 1;
        counted += 1;
    }
    if counted == 0 {
        return Ok(0.0);
    }
    let best_hits = (0..k)
        .permutations(k)
        .map(|perm| perm.iter().enumerate().map(|(p, &t)| confusion[p][t]).sum::<usize>())
        .max()
        .unwrap_or(0);
    Ok((counted - best_hits) as f64 / counted as f64 * 100.0)
}
