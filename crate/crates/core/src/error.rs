use thiserror::Error;

/// Errors produced by the segmentation library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GdmError {
    /// Input data is malformed (non-finite values, empty sets, shape mismatch).
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// A tunable is outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// The singular spectrum is identically zero, so no dimension is defined.
    #[error("degenerate spectrum: all singular values are zero")]
    DegenerateSpectrum,
    /// A cluster's (scaled) data matrix is empty or numerically zero.
    #[error("degenerate cluster {0}: empty or all-zero data")]
    DegenerateCluster(usize),
    /// Too few points survived outlier rejection to form the requested clusters.
    #[error("insufficient inliers: {survivors} points survive but {clusters} clusters were requested")]
    InsufficientInliers { survivors: usize, clusters: usize },
    /// Requested operation is outside the supported regime.
    #[error("unsupported: {0}")]
    Unsupported(String),
    /// Synthetic data generation could not satisfy its constraints.
    #[error("generation failed: {0}")]
    Generation(String),
}

pub type Result<T> = std::result::Result<T, GdmError>;
