//! Agglomerative initialization: start from singletons and repeatedly commit
//! the sampled merge that yields the lowest global dimension.

use rand::seq::index;
use rand::Rng;

use super::sketch::Sketch;
use super::{GdmConfig, Partition};
use crate::embedding::DataMatrix;

struct Group {
    members: Vec<usize>,
    sketch: Sketch,
    /// `d^p` of this group.
    power: f64,
}

/// `(i, j)` with `i < j` for the `t`-th pair in row-major order over `s` sets.
fn decode_pair(mut t: usize, s: usize) -> (usize, usize) {
    let mut i = 0;
    loop {
        let row = s - 1 - i;
        if t < row {
            return (i, i + 1 + t);
        }
        t -= row;
        i += 1;
    }
}

pub(crate) fn merge_init<R: Rng + ?Sized>(a: &DataMatrix, cfg: &GdmConfig, rng: &mut R) -> Partition {
    let n = a.len();
    let k = cfg.k;
    if n <= k {
        return Partition::new((0..n).collect(), k).expect("labels below k");
    }
    let eps = cfg.eps;
    let p = cfg.p;
    let mut groups: Vec<Group> = (0..n)
        .map(|j| {
            let sketch = Sketch::from_point(a.matrix().column(j).as_slice());
            let power = sketch.dimension(eps).powf(p);
            Group { members: vec![j], sketch, power }
        })
        .collect();

    while groups.len() > k {
        let s = groups.len();
        let total: f64 = groups.iter().map(|g| g.power).sum();
        let pairs = s * (s - 1) / 2;
        let sampled = cfg.merge_candidates.max(1).min(pairs);
        let candidates: Vec<usize> =
            if sampled == pairs { (0..pairs).collect() } else { index::sample(rng, pairs, sampled).into_vec() };

        let mut best: Option<(f64, usize, usize, Sketch, f64)> = None;
        for t in candidates {
            let (i, j) = decode_pair(t, s);
            let merged = groups[i].sketch.merge(&groups[j].sketch);
            let power = merged.dimension(eps).powf(p);
            // Untouched groups keep their cached dimensions.
            let score = total - groups[i].power - groups[j].power + power;
            if best.as_ref().is_none_or(|b| score < b.0) {
                best = Some((score, i, j, merged, power));
            }
        }
        let (_, i, j, sketch, power) = best.expect("at least one candidate pair");
        let absorbed = groups.swap_remove(j);
        let target = &mut groups[i];
        target.members.extend(absorbed.members);
        target.sketch = sketch;
        target.power = power;
    }

    // Label groups in order of their smallest member.
    groups.sort_by_key(|g| g.members.iter().copied().min());
    let mut labels = vec![0; n];
    for (label, g) in groups.iter().enumerate() {
        for &j in &g.members {
            labels[j] = label;
        }
    }
    Partition::new(labels, k).expect("labels below k")
}
