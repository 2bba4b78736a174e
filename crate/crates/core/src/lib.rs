//! Global dimension minimization (GDM) for hybrid linear modeling.
//!
//! The crate clusters points that lie near a union of linear subspaces by
//! minimizing the p-norm of per-cluster empirical dimensions over soft
//! partitions. It is specialized to two-view motion segmentation through the
//! Kronecker embedding of point correspondences, and includes outlier
//! rejection pipelines built on an augmented objective.
//!
//! Module map:
//! - [`embedding`]: correspondences to data vectors.
//! - [`dimension`]: singular spectra and the empirical dimension estimator.
//! - [`objective`]: global dimension, its gradient and the outlier variant.
//! - [`optimizer`]: merge initialization, projected descent, refinement.
//! - [`robust`]: known-fraction and model-reassign outlier rejection.
//! - [`evalkit`]: synthetic generators, metrics and ROC sweeps.

pub mod dimension;
pub mod embedding;
pub mod error;
pub mod evalkit;
pub mod objective;
pub mod optimizer;
pub mod robust;

pub use dimension::{empirical_dimension, p_lower_bound, thin_svd, SingularSpectrum};
pub use embedding::{embed_dataset, embed_linear, embed_nonlinear, DataMatrix, EmbeddingMode, PointCorrespondence};
pub use error::{GdmError, Result};
pub use objective::{DegeneratePolicy, GradientMatrix, MembershipMatrix, ObjectiveParams};
pub use optimizer::{gdm, GdmConfig, Partition, SegmentationResult};
pub use robust::{known_fraction, model_reassign, KappaRule, OutlierConfig, OutlierMode};
