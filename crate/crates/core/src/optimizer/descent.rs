use nalgebra::DMatrix;

use super::simplex::project_simplex;
use super::GdmConfig;
use crate::embedding::DataMatrix;
use crate::error::Result;
use crate::objective::{
    gd_outlier_value_and_gradient, gd_value_and_gradient, global_dimension_outlier, global_dimension_soft,
    MembershipMatrix,
};

/// Which objective the projected descent minimizes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DescentObjective {
    Standard,
    /// Row 0 of the membership is an outlier group with unit cost `alpha`.
    Outlier {
        alpha: f64,
    },
}

impl DescentObjective {
    fn value_and_gradient(&self, a: &DataMatrix, m: &MembershipMatrix, cfg: &GdmConfig) -> Result<(f64, DMatrix<f64>)> {
        let (value, g) = match *self {
            DescentObjective::Standard => gd_value_and_gradient(a, m, &cfg.objective_params())?,
            DescentObjective::Outlier { alpha } => {
                gd_outlier_value_and_gradient(a, m, &cfg.objective_params().with_alpha(alpha))?
            }
        };
        Ok((value, g.0))
    }

    pub(crate) fn value(&self, a: &DataMatrix, m: &MembershipMatrix, cfg: &GdmConfig) -> Result<f64> {
        match *self {
            DescentObjective::Standard => global_dimension_soft(a, m, &cfg.objective_params()),
            DescentObjective::Outlier { alpha } => {
                global_dimension_outlier(a, m, &cfg.objective_params().with_alpha(alpha))
            }
        }
    }
}

/// Mean Euclidean norm of the `ceil(N / 10)` largest gradient columns.
pub(crate) fn step_scale(g: &DMatrix<f64>) -> f64 {
    let mut norms: Vec<f64> = g.column_iter().map(|c| c.norm()).collect();
    norms.sort_by(|a, b| b.total_cmp(a));
    let top = norms.len().div_ceil(10).max(1);
    norms[..top].iter().sum::<f64>() / top as f64
}

/// Projected gradient descent for `cfg.grad_iters` iterations.
///
/// Returns the final membership and the objective value before each step
/// followed by the value at the returned membership.
pub fn descend_with(
    a: &DataMatrix,
    m0: &MembershipMatrix,
    cfg: &GdmConfig,
    objective: DescentObjective,
) -> Result<(MembershipMatrix, Vec<f64>)> {
    let mut m = m0.matrix().clone();
    let mut trace = Vec::with_capacity(cfg.grad_iters + 1);
    for _ in 0..cfg.grad_iters {
        let current = MembershipMatrix::new_unchecked(m.clone());
        let (value, g) = objective.value_and_gradient(a, &current, cfg)?;
        trace.push(value);
        let rho = step_scale(&g);
        if !(rho > 0.0 && rho.is_finite()) {
            return Ok((current, trace));
        }
        m -= g * (cfg.step_target / rho);
        for mut col in m.column_iter_mut() {
            let projected = project_simplex(col.as_slice());
            col.copy_from_slice(&projected);
        }
    }
    let m = MembershipMatrix::new_unchecked(m);
    if cfg.grad_iters > 0 {
        trace.push(objective.value(a, &m, cfg)?);
    }
    Ok((m, trace))
}

/// Projected gradient descent on the standard global dimension.
pub fn descend(a: &DataMatrix, m0: &MembershipMatrix, cfg: &GdmConfig) -> Result<MembershipMatrix> {
    descend_with(a, m0, cfg, DescentObjective::Standard).map(|(m, _)| m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_scale_uses_top_tenth() {
        // 20 columns -> top 2 norms are 10 and 8.
        let mut g = DMatrix::zeros(2, 20);
        g[(0, 3)] = 10.0;
        g[(1, 7)] = 8.0;
        g[(0, 9)] = 1.0;
        assert_eq!(step_scale(&g), 9.0);
        // 5 columns -> ceil(0.5) = 1.
        let mut h = DMatrix::zeros(1, 5);
        h[(0, 0)] = 3.0;
        h[(0, 1)] = 2.0;
        assert_eq!(step_scale(&h), 3.0);
    }
}
