//! Global dimension over soft partitions and its analytic gradient.
//!
//! For a membership matrix `M` (columns on the probability simplex) cluster
//! `k` sees the data scaled column-wise by row `k` of `M`. Its empirical
//! dimension is `d_k`, and the global dimension is `||(d_1, ..., d_K)||_p`.
//! In outlier mode row 0 of `M` is a reject group that costs `alpha` per unit
//! of membership instead of contributing a dimension.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dimension::{conjugate_exponent, empirical_dimension, singular_values, thin_svd, RANK_TOLERANCE};
use crate::embedding::DataMatrix;
use crate::error::{GdmError, Result};
use crate::optimizer::Partition;

/// Column-sum tolerance for membership matrices.
pub const SIMPLEX_TOLERANCE: f64 = 1e-10;

/// A cluster whose scaled data has a top singular value below this is empty.
pub const DEGENERATE_SIGMA: f64 = 1e-14;

/// Relative floor applied to singular values inside the gradient weights.
pub const GRADIENT_SIGMA_FLOOR: f64 = 1e-8;

/// How an empty or all-zero cluster is treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DegeneratePolicy {
    /// Report [`GdmError::DegenerateCluster`].
    #[default]
    Error,
    /// Count the cluster as dimension 0 with a zero gradient row.
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveParams {
    pub eps: f64,
    pub p: f64,
    /// Unit cost of the outlier row (outlier mode only).
    pub alpha: f64,
    pub degenerate: DegeneratePolicy,
}

impl Default for ObjectiveParams {
    fn default() -> Self {
        Self { eps: 0.35, p: 15.0, alpha: 0.01, degenerate: DegeneratePolicy::Error }
    }
}

impl ObjectiveParams {
    pub fn new(eps: f64, p: f64) -> Result<Self> {
        let params = Self { eps, p, ..Self::default() };
        params.validate()?;
        Ok(params)
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_policy(mut self, degenerate: DegeneratePolicy) -> Self {
        self.degenerate = degenerate;
        self
    }

    pub fn delta(&self) -> f64 {
        conjugate_exponent(self.eps)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(GdmError::InvalidParameter(format!("eps must lie in (0, 1), got {}", self.eps)));
        }
        if !(self.p > 0.0 && self.p.is_finite()) {
            return Err(GdmError::InvalidParameter(format!("p must be positive, got {}", self.p)));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(GdmError::InvalidParameter(format!("alpha must be nonnegative, got {}", self.alpha)));
        }
        Ok(())
    }
}

/// Soft assignment of `N` points to `K` clusters (rows), one probability
/// vector per column.
#[derive(Debug, Clone, PartialEq)]
pub struct MembershipMatrix(DMatrix<f64>);

impl MembershipMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() == 0 || m.ncols() == 0 {
            return Err(GdmError::InvalidInput("membership matrix must be non-empty".into()));
        }
        for (j, col) in m.column_iter().enumerate() {
            if col.iter().any(|&v| !v.is_finite() || !(-SIMPLEX_TOLERANCE..=1.0 + SIMPLEX_TOLERANCE).contains(&v)) {
                return Err(GdmError::InvalidInput(format!("membership column {j} has entries outside [0, 1]")));
            }
            if (col.sum() - 1.0).abs() > SIMPLEX_TOLERANCE {
                return Err(GdmError::InvalidInput(format!("membership column {j} does not sum to 1")));
            }
        }
        Ok(Self(m))
    }

    /// Skips validation; callers guarantee columns lie on the simplex.
    pub(crate) fn new_unchecked(m: DMatrix<f64>) -> Self {
        Self(m)
    }

    /// 0/1 matrix with a single one per column at `labels[j]`.
    pub fn indicator(labels: &[usize], k: usize) -> Result<Self> {
        if labels.is_empty() {
            return Err(GdmError::InvalidInput("no labels".into()));
        }
        let mut m = DMatrix::zeros(k, labels.len());
        for (j, &l) in labels.iter().enumerate() {
            if l >= k {
                return Err(GdmError::InvalidParameter(format!("label {l} out of range for {k} clusters")));
            }
            m[(l, j)] = 1.0;
        }
        Ok(Self(m))
    }

    pub fn uniform(k: usize, n: usize) -> Self {
        Self(DMatrix::from_element(k, n, 1.0 / k as f64))
    }

    pub fn num_rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn num_points(&self) -> usize {
        self.0.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.0[(row, col)]
    }
}

/// `dGD / dM`, same shape as the membership matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientMatrix(pub DMatrix<f64>);

impl GradientMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }
}

/// `A_k`: column `j` of the data scaled by `M[k, j]`.
pub fn scaled_cluster_matrix(a: &DataMatrix, m: &MembershipMatrix, k: usize) -> Result<DMatrix<f64>> {
    check_shapes(a, m)?;
    if k >= m.num_rows() {
        return Err(GdmError::InvalidParameter(format!("cluster {k} out of range for {} rows", m.num_rows())));
    }
    let mut out = a.matrix().clone();
    for (j, mut col) in out.column_iter_mut().enumerate() {
        col *= m.get(k, j);
    }
    Ok(out)
}

fn check_shapes(a: &DataMatrix, m: &MembershipMatrix) -> Result<()> {
    if a.len() != m.num_points() {
        return Err(GdmError::InvalidInput(format!(
            "data has {} points but membership has {} columns",
            a.len(),
            m.num_points()
        )));
    }
    Ok(())
}

/// `||values||_p`, evaluated relative to the largest entry.
pub(crate) fn p_norm(values: &[f64], p: f64) -> f64 {
    let max = values.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return 0.0;
    }
    max * values.iter().map(|&v| (v / max).powf(p)).sum::<f64>().powf(1.0 / p)
}

/// Per-cluster result of one decomposition.
struct ClusterEval {
    /// `None` for a degenerate cluster.
    dim: Option<f64>,
    /// `d(d_k) / dM[k, n]` for every point; empty unless requested.
    grad: Vec<f64>,
}

/// Empirical dimension (and optionally its gradient) of `A * diag(weights)`.
fn eval_cluster(a: &DataMatrix, weights: &[f64], eps: f64, with_grad: bool) -> Result<ClusterEval> {
    let n = a.len();
    let active: Vec<usize> = (0..n).filter(|&j| weights[j] != 0.0).collect();
    let degenerate = ClusterEval { dim: None, grad: if with_grad { vec![0.0; n] } else { Vec::new() } };
    if active.is_empty() {
        return Ok(degenerate);
    }
    // Zero-weight columns leave the spectrum unchanged, so they are dropped.
    let mut scaled = a.select(&active);
    for (c, &j) in active.iter().enumerate() {
        scaled.column_mut(c).scale_mut(weights[j]);
    }

    if !with_grad {
        let sigma = singular_values(&scaled)?;
        if sigma.first().copied().unwrap_or(0.0) < DEGENERATE_SIGMA {
            return Ok(degenerate);
        }
        return Ok(ClusterEval { dim: Some(empirical_dimension(&sigma, eps)?), grad: Vec::new() });
    }

    let svd = thin_svd(&scaled)?;
    let sigma_max = svd.sigma_max();
    if sigma_max < DEGENERATE_SIGMA {
        return Ok(degenerate);
    }
    let dim = empirical_dimension(svd.sigma.as_slice(), eps)?;
    let d_weights = sigma_derivative(svd.sigma.as_slice(), eps);
    let floor = GRADIENT_SIGMA_FLOOR * sigma_max;

    // Row n of V_k equals A_k[:, n]^T U_k / sigma = m_n (U_k^T v_n) / sigma,
    // so each entry reduces to m_n * sum_j w_j (u_j . v_n)^2 / sigma_j.
    let proj = svd.u.transpose() * a.matrix();
    let mut grad = vec![0.0; n];
    for &j in &active {
        let col = proj.column(j);
        let s: f64 = (0..svd.sigma.len()).map(|i| d_weights[i] * col[i] * col[i] / svd.sigma[i].max(floor)).sum();
        grad[j] = weights[j] * s;
    }
    Ok(ClusterEval { dim: Some(dim), grad })
}

/// Diagonal of `D_k`: `d(d_hat)/d(sigma_j) = C1 sigma_j^(eps-1) - C2 sigma_j^(delta-1)`.
///
/// Singular values are floored at `GRADIENT_SIGMA_FLOOR * sigma_max` so the
/// negative powers stay bounded near rank deficiency.
fn sigma_derivative(sigma: &[f64], eps: f64) -> DVector<f64> {
    let delta = conjugate_exponent(eps);
    let max = sigma.iter().copied().fold(0.0, f64::max);
    let cutoff = RANK_TOLERANCE * max;
    // Work with sigma / max; D scales as 1 / max.
    let unit: Vec<f64> = sigma.iter().map(|&s| if s > cutoff { s / max } else { 0.0 }).collect();
    let sum_eps: f64 = unit.iter().filter(|&&s| s > 0.0).map(|s| s.powf(eps)).sum();
    let sum_delta: f64 = unit.iter().filter(|&&s| s > 0.0).map(|s| s.powf(delta)).sum();
    let norm_eps = sum_eps.powf(1.0 / eps);
    let norm_delta = sum_delta.powf(1.0 / delta);
    let c1 = norm_eps.powf(1.0 - eps) / norm_delta;
    let c2 = norm_eps * norm_delta.powf(1.0 - delta) / (norm_delta * norm_delta);
    let floor = GRADIENT_SIGMA_FLOOR;
    DVector::from_iterator(
        sigma.len(),
        unit.iter().map(|&s| {
            let s = s.max(floor);
            (c1 * s.powf(eps - 1.0) - c2 * s.powf(delta - 1.0)) / max
        }),
    )
}

fn resolve_dims(evals: &[ClusterEval], policy: DegeneratePolicy, row_offset: usize) -> Result<Vec<f64>> {
    evals
        .iter()
        .enumerate()
        .map(|(k, e)| match (e.dim, policy) {
            (Some(d), _) => Ok(d),
            (None, DegeneratePolicy::Zero) => Ok(0.0),
            (None, DegeneratePolicy::Error) => Err(GdmError::DegenerateCluster(k + row_offset)),
        })
        .collect()
}

fn eval_rows(
    a: &DataMatrix,
    m: &MembershipMatrix,
    rows: std::ops::Range<usize>,
    eps: f64,
    with_grad: bool,
) -> Result<Vec<ClusterEval>> {
    rows.map(|k| {
        let weights: Vec<f64> = m.matrix().row(k).iter().copied().collect();
        eval_cluster(a, &weights, eps, with_grad)
    })
    .collect()
}

/// Per-cluster empirical dimensions of the scaled matrices `A_k`.
pub fn soft_cluster_dimensions(a: &DataMatrix, m: &MembershipMatrix, params: &ObjectiveParams) -> Result<Vec<f64>> {
    params.validate()?;
    check_shapes(a, m)?;
    let evals = eval_rows(a, m, 0..m.num_rows(), params.eps, false)?;
    resolve_dims(&evals, params.degenerate, 0)
}

/// Global dimension of a soft partition.
pub fn global_dimension_soft(a: &DataMatrix, m: &MembershipMatrix, params: &ObjectiveParams) -> Result<f64> {
    Ok(p_norm(&soft_cluster_dimensions(a, m, params)?, params.p))
}

/// Per-cluster empirical dimensions of a hard partition; outliers are ignored.
pub fn hard_cluster_dimensions(a: &DataMatrix, partition: &Partition, params: &ObjectiveParams) -> Result<Vec<f64>> {
    if partition.len() != a.len() {
        return Err(GdmError::InvalidInput("partition and data differ in length".into()));
    }
    let members = partition.members();
    members
        .iter()
        .enumerate()
        .map(|(k, idx)| {
            let dim = if idx.is_empty() {
                None
            } else {
                let sigma = singular_values(&a.select(idx))?;
                if sigma[0] < DEGENERATE_SIGMA {
                    None
                } else {
                    Some(empirical_dimension(&sigma, params.eps)?)
                }
            };
            match (dim, params.degenerate) {
                (Some(d), _) => Ok(d),
                (None, DegeneratePolicy::Zero) => Ok(0.0),
                (None, DegeneratePolicy::Error) => Err(GdmError::DegenerateCluster(k)),
            }
        })
        .collect()
}

/// Global dimension of a hard partition: the p-norm of the empirical
/// dimensions of the unscaled cluster sub-matrices.
pub fn global_dimension_hard(a: &DataMatrix, partition: &Partition, params: &ObjectiveParams) -> Result<f64> {
    params.validate()?;
    Ok(p_norm(&hard_cluster_dimensions(a, partition, params)?, params.p))
}

/// `(d_k / GD)^(p - 1)`, the chain-rule factor from the p-norm.
fn norm_weights(dims: &[f64], p: f64) -> Vec<f64> {
    let gd = p_norm(dims, p);
    dims.iter().map(|&d| if gd > 0.0 && d > 0.0 { (d / gd).powf(p - 1.0) } else { 0.0 }).collect()
}

fn assemble_gradient(evals: &[ClusterEval], dims: &[f64], p: f64, out: &mut DMatrix<f64>, row_offset: usize) {
    let weights = norm_weights(dims, p);
    for (k, (eval, w)) in evals.iter().zip(&weights).enumerate() {
        for (n, g) in eval.grad.iter().enumerate() {
            out[(k + row_offset, n)] = w * g;
        }
    }
}

/// Soft global dimension together with its gradient, from one SVD per cluster.
pub fn gd_value_and_gradient(
    a: &DataMatrix,
    m: &MembershipMatrix,
    params: &ObjectiveParams,
) -> Result<(f64, GradientMatrix)> {
    params.validate()?;
    check_shapes(a, m)?;
    let evals = eval_rows(a, m, 0..m.num_rows(), params.eps, true)?;
    let dims = resolve_dims(&evals, params.degenerate, 0)?;
    let mut g = DMatrix::zeros(m.num_rows(), m.num_points());
    assemble_gradient(&evals, &dims, params.p, &mut g, 0);
    Ok((p_norm(&dims, params.p), GradientMatrix(g)))
}

/// Analytic gradient of [`global_dimension_soft`].
pub fn gd_gradient(a: &DataMatrix, m: &MembershipMatrix, params: &ObjectiveParams) -> Result<GradientMatrix> {
    gd_value_and_gradient(a, m, params).map(|(_, g)| g)
}

fn check_outlier_shape(m: &MembershipMatrix) -> Result<()> {
    if m.num_rows() < 2 {
        return Err(GdmError::InvalidInput("outlier membership needs an outlier row and at least one cluster".into()));
    }
    Ok(())
}

/// `alpha * sum(M[0, :]) + ||(d_1, ..., d_K)||_p` where row 0 is the outlier group.
pub fn global_dimension_outlier(a: &DataMatrix, m: &MembershipMatrix, params: &ObjectiveParams) -> Result<f64> {
    params.validate()?;
    check_shapes(a, m)?;
    check_outlier_shape(m)?;
    let evals = eval_rows(a, m, 1..m.num_rows(), params.eps, false)?;
    let dims = resolve_dims(&evals, params.degenerate, 1)?;
    Ok(params.alpha * m.matrix().row(0).sum() + p_norm(&dims, params.p))
}

/// Outlier objective and its gradient. Row 0 of the gradient is
/// `alpha * M[0, n]`; the cluster rows follow the soft gradient restricted to
/// rows `1..=K`.
pub fn gd_outlier_value_and_gradient(
    a: &DataMatrix,
    m: &MembershipMatrix,
    params: &ObjectiveParams,
) -> Result<(f64, GradientMatrix)> {
    params.validate()?;
    check_shapes(a, m)?;
    check_outlier_shape(m)?;
    let evals = eval_rows(a, m, 1..m.num_rows(), params.eps, true)?;
    let dims = resolve_dims(&evals, params.degenerate, 1)?;
    let mut g = DMatrix::zeros(m.num_rows(), m.num_points());
    for n in 0..m.num_points() {
        g[(0, n)] = params.alpha * m.get(0, n);
    }
    assemble_gradient(&evals, &dims, params.p, &mut g, 1);
    let value = params.alpha * m.matrix().row(0).sum() + p_norm(&dims, params.p);
    Ok((value, GradientMatrix(g)))
}

pub fn gd_gradient_outlier(a: &DataMatrix, m: &MembershipMatrix, params: &ObjectiveParams) -> Result<GradientMatrix> {
    gd_outlier_value_and_gradient(a, m, params).map(|(_, g)| g)
}
