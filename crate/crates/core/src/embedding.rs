//! Embedding of two-view point correspondences into data vectors.
//!
//! The nonlinear (Kronecker) embedding maps a correspondence to a vector of
//! `R^9` that is orthogonal to `vec(F)` for the fundamental matrix `F` of its
//! rigid motion, so each motion spans a subspace of dimension at most 8.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{GdmError, Result};

/// One tracked feature seen in two views.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointCorrespondence {
    pub x: f64,
    pub y: f64,
    pub x2: f64,
    pub y2: f64,
}

impl PointCorrespondence {
    pub fn new(x: f64, y: f64, x2: f64, y2: f64) -> Self {
        Self { x, y, x2, y2 }
    }

    fn validate(&self) -> Result<()> {
        if [self.x, self.y, self.x2, self.y2].iter().all(|c| c.is_finite()) {
            Ok(())
        } else {
            Err(GdmError::InvalidInput(format!("non-finite correspondence {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingMode {
    #[default]
    Nonlinear,
    Linear,
}

impl EmbeddingMode {
    pub fn ambient_dim(self) -> usize {
        match self {
            EmbeddingMode::Nonlinear => 9,
            EmbeddingMode::Linear => 4,
        }
    }
}

/// `(xx', x'y, x', xy', yy', y', x, y, 1)`.
pub fn embed_nonlinear(pc: &PointCorrespondence) -> Result<[f64; 9]> {
    pc.validate()?;
    let PointCorrespondence { x, y, x2, y2 } = *pc;
    Ok([x * x2, x2 * y, x2, x * y2, y * y2, y2, x, y, 1.0])
}

/// `(x, y, x', y')`.
pub fn embed_linear(pc: &PointCorrespondence) -> Result<[f64; 4]> {
    pc.validate()?;
    Ok([pc.x, pc.y, pc.x2, pc.y2])
}

/// A `D x N` matrix whose columns are data vectors.
///
/// Entries are always finite and `N >= 1`. The ambient dimension is not
/// restricted to the two embedding sizes so that generic subspace data can be
/// clustered with the same machinery.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    entries: DMatrix<f64>,
}

impl DataMatrix {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        if entries.ncols() == 0 || entries.nrows() == 0 {
            return Err(GdmError::InvalidInput("data matrix must be non-empty".into()));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(GdmError::InvalidInput("data matrix has non-finite entries".into()));
        }
        Ok(Self { entries })
    }

    pub fn from_columns(columns: &[DVector<f64>]) -> Result<Self> {
        if columns.is_empty() {
            return Err(GdmError::InvalidInput("no columns".into()));
        }
        let dim = columns[0].len();
        if columns.iter().any(|c| c.len() != dim) {
            return Err(GdmError::InvalidInput("columns differ in length".into()));
        }
        Self::new(DMatrix::from_columns(columns))
    }

    /// Ambient dimension `D`.
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    /// Number of points `N`.
    pub fn len(&self) -> usize {
        self.entries.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.ncols() == 0
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.entries
    }

    /// Sub-matrix formed by the given columns, in order.
    pub fn select(&self, indices: &[usize]) -> DMatrix<f64> {
        self.entries.select_columns(indices)
    }

    /// New data matrix keeping only the given columns.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        Self::new(self.select(indices))
    }
}

/// Embeds every correspondence as one column.
///
/// With `normalize` set, each view's coordinates are first centered on their
/// centroid and divided by the largest absolute centered coordinate of that
/// view, so they lie in `[-1, 1]`.
pub fn embed_dataset(pcs: &[PointCorrespondence], mode: EmbeddingMode, normalize: bool) -> Result<DataMatrix> {
    if pcs.is_empty() {
        return Err(GdmError::InvalidInput("no correspondences".into()));
    }
    for pc in pcs {
        pc.validate()?;
    }
    let owned;
    let pcs = if normalize {
        owned = normalize_views(pcs);
        &owned[..]
    } else {
        pcs
    };

    let dim = mode.ambient_dim();
    let mut entries = DMatrix::zeros(dim, pcs.len());
    for (j, pc) in pcs.iter().enumerate() {
        match mode {
            EmbeddingMode::Nonlinear => entries.column_mut(j).copy_from_slice(&embed_nonlinear(pc)?),
            EmbeddingMode::Linear => entries.column_mut(j).copy_from_slice(&embed_linear(pc)?),
        }
    }
    DataMatrix::new(entries)
}

fn normalize_views(pcs: &[PointCorrespondence]) -> Vec<PointCorrespondence> {
    let n = pcs.len() as f64;
    let (cx, cy) = pcs.iter().fold((0.0, 0.0), |(a, b), p| (a + p.x / n, b + p.y / n));
    let (cx2, cy2) = pcs.iter().fold((0.0, 0.0), |(a, b), p| (a + p.x2 / n, b + p.y2 / n));
    let scale1 = pcs.iter().map(|p| (p.x - cx).abs().max((p.y - cy).abs())).fold(0.0, f64::max);
    let scale2 = pcs.iter().map(|p| (p.x2 - cx2).abs().max((p.y2 - cy2).abs())).fold(0.0, f64::max);
    let s1 = if scale1 > 0.0 { scale1 } else { 1.0 };
    let s2 = if scale2 > 0.0 { scale2 } else { 1.0 };
    pcs.iter()
        .map(|p| PointCorrespondence::new((p.x - cx) / s1, (p.y - cy) / s1, (p.x2 - cx2) / s2, (p.y2 - cy2) / s2))
        .collect()
}
