use nalgebra::{Matrix3, Rotation3, Unit, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embedding::PointCorrespondence;
use crate::error::{GdmError, Result};
use crate::optimizer::Partition;

const MIN_DEPTH: f64 = 0.5;
const MAX_RETRIES: usize = 1000;

/// Rigid bodies seen by a pinhole camera in two frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoViewSpec {
    pub points_per_body: Vec<usize>,
    /// Put every body's points on a plane through its center.
    pub coplanar: bool,
    /// Gaussian noise added to image coordinates.
    pub noise_sigma: f64,
    /// Random correspondences appended after the inliers.
    pub outlier_count: usize,
    /// Largest rotation angle between frames, in radians.
    pub max_rotation: f64,
    /// Translation length range between frames.
    pub translation: (f64, f64),
    pub focal: f64,
    pub seed: u64,
}

impl TwoViewSpec {
    pub fn new(points_per_body: Vec<usize>, seed: u64) -> Self {
        Self {
            points_per_body,
            coplanar: false,
            noise_sigma: 0.0,
            outlier_count: 0,
            max_rotation: 0.3,
            translation: (0.3, 1.0),
            focal: 1.0,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoViewScene {
    pub correspondences: Vec<PointCorrespondence>,
    pub truth: Partition,
    /// Row-major fundamental matrix of each body's motion, in image coordinates.
    pub fundamentals: Vec<[f64; 9]>,
}

fn cross_matrix(t: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -t.z, t.y, t.z, 0.0, -t.x, -t.y, t.x, 0.0)
}

fn unit_vector<R: Rng>(rng: &mut R) -> Unit<Vector3<f64>> {
    loop {
        let v = Vector3::from_fn(|_, _| rng.random_range(-1.0..1.0));
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return Unit::new_normalize(v);
        }
    }
}

fn gaussian<R: Rng>(rng: &mut R, sigma: f64) -> f64 {
    if sigma > 0.0 {
        sigma * rng.sample::<f64, _>(rand_distr::StandardNormal)
    } else {
        0.0
    }
}

/// Samples a scene where body `b` moves by `X' = R_b X + t_b` between frames.
pub fn sample_two_view_scene(spec: &TwoViewSpec) -> Result<TwoViewScene> {
    if spec.points_per_body.is_empty() {
        return Err(GdmError::InvalidParameter("at least one rigid body is required".into()));
    }
    let valid = spec.focal > 0.0 && spec.noise_sigma >= 0.0 && spec.translation.0 <= spec.translation.1;
    if !valid {
        return Err(GdmError::InvalidParameter("invalid camera, noise or translation settings".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let f = spec.focal;
    let k_inv = Matrix3::new(1.0 / f, 0.0, 0.0, 0.0, 1.0 / f, 0.0, 0.0, 0.0, 1.0);
    let mut correspondences = Vec::new();
    let mut labels = Vec::new();
    let mut fundamentals = Vec::new();

    for (b, &count) in spec.points_per_body.iter().enumerate() {
        let center = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-0.7..0.7), rng.random_range(4.0..7.0));
        let rotation = Rotation3::from_axis_angle(&unit_vector(&mut rng), rng.random_range(0.0..=spec.max_rotation));
        let t = unit_vector(&mut rng).into_inner() * rng.random_range(spec.translation.0..=spec.translation.1);
        let plane = (unit_vector(&mut rng).into_inner(), unit_vector(&mut rng).into_inner());
        let e1 = plane.0;
        let e2 = Unit::new_normalize(plane.1 - e1 * e1.dot(&plane.1)).into_inner();

        let essential = cross_matrix(&t) * rotation.matrix();
        let fundamental = k_inv.transpose() * essential * k_inv;
        let mut row_major = [0.0; 9];
        for (i, v) in row_major.iter_mut().enumerate() {
            *v = fundamental[(i / 3, i % 3)];
        }
        fundamentals.push(row_major);

        for _ in 0..count {
            let mut accepted = None;
            for _ in 0..MAX_RETRIES {
                let x = if spec.coplanar {
                    center + e1 * rng.random_range(-1.5..1.5) + e2 * rng.random_range(-1.5..1.5)
                } else {
                    center + Vector3::from_fn(|_, _| rng.random_range(-1.5..1.5))
                };
                let moved = rotation * x + t;
                if x.z > MIN_DEPTH && moved.z > MIN_DEPTH {
                    accepted = Some((x, moved));
                    break;
                }
            }
            let (x, moved) = accepted.ok_or_else(|| {
                GdmError::Generation(format!("body {b}: no point in front of the camera after {MAX_RETRIES} tries"))
            })?;
            correspondences.push(PointCorrespondence::new(
                f * x.x / x.z + gaussian(&mut rng, spec.noise_sigma),
                f * x.y / x.z + gaussian(&mut rng, spec.noise_sigma),
                f * moved.x / moved.z + gaussian(&mut rng, spec.noise_sigma),
                f * moved.y / moved.z + gaussian(&mut rng, spec.noise_sigma),
            ));
            labels.push(b);
        }
    }

    let first_outlier = correspondences.len();
    if spec.outlier_count > 0 {
        let (mut lo, mut hi) = ([f64::INFINITY; 4], [f64::NEG_INFINITY; 4]);
        for pc in &correspondences {
            for (i, v) in [pc.x, pc.y, pc.x2, pc.y2].into_iter().enumerate() {
                lo[i] = lo[i].min(v);
                hi[i] = hi[i].max(v);
            }
        }
        if correspondences.is_empty() {
            (lo, hi) = ([-f; 4], [f; 4]);
        }
        let mut draw = |i: usize| if hi[i] > lo[i] { rng.random_range(lo[i]..hi[i]) } else { lo[i] };
        for _ in 0..spec.outlier_count {
            correspondences.push(PointCorrespondence::new(draw(0), draw(1), draw(2), draw(3)));
            labels.push(0);
        }
    }
    let truth = Partition::new(labels, spec.points_per_body.len())?.with_outliers(first_outlier..correspondences.len());
    Ok(TwoViewScene { correspondences, truth, fundamentals })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dimension::{numerical_rank, singular_values};
    use crate::embedding::{embed_dataset, embed_nonlinear, EmbeddingMode};

    #[test]
    fn epipolar_constraint_holds() {
        for seed in 0..10 {
            let mut spec = TwoViewSpec::new(vec![30], seed);
            spec.focal = if seed % 2 == 0 { 1.0 } else { 3.0 };
            let scene = sample_two_view_scene(&spec).unwrap();
            let f = scene.fundamentals[0];
            let norm = f.iter().map(|v| v * v).sum::<f64>().sqrt();
            for pc in &scene.correspondences {
                let v = embed_nonlinear(pc).unwrap();
                let dot: f64 = v.iter().zip(&f).map(|(a, b)| a * b).sum();
                assert!((dot / norm).abs() < 1e-8, "seed {seed}: {dot}");
            }
        }
    }

    #[test]
    fn embedded_ranks() {
        for seed in 0..5 {
            let scene = sample_two_view_scene(&TwoViewSpec::new(vec![30], seed)).unwrap();
            let a = embed_dataset(&scene.correspondences, EmbeddingMode::Nonlinear, false).unwrap();
            assert!(numerical_rank(&singular_values(a.matrix()).unwrap()) <= 8);

            let mut planar = TwoViewSpec::new(vec![30], seed);
            planar.coplanar = true;
            let scene = sample_two_view_scene(&planar).unwrap();
            let a = embed_dataset(&scene.correspondences, EmbeddingMode::Nonlinear, false).unwrap();
            assert!(numerical_rank(&singular_values(a.matrix()).unwrap()) <= 6);
        }
    }

    #[test]
    fn outliers_appended() {
        let mut spec = TwoViewSpec::new(vec![10, 12], 4);
        spec.outlier_count = 5;
        let scene = sample_two_view_scene(&spec).unwrap();
        assert_eq!(scene.correspondences.len(), 27);
        assert_eq!(scene.truth.outliers().len(), 5);
        assert_eq!(scene.truth.members()[1].len(), 12);
        assert_eq!(scene, sample_two_view_scene(&spec).unwrap());
    }
}
