//! Conditional information gain about one task's latent objective values.
//!
//! With the data of one target task `m*` and the data of every other task,
//! the unified model conditions the target block on the rest:
//!
//! ```text
//! K_cond = K_{m*,m*} − Bᵀ (K_rest + σ² I)⁻¹ B
//! IG     = ½ log |I + σ⁻² K_cond|
//! ```
//!
//! The independent strategy sees only the target block, `IG = ½ log |I + σ⁻² K_{m*,m*}|`.

use nalgebra::DMatrix;

use super::kernel::GpHyperparams;
use super::model::{kernel_matrix, TrainingSet};
use crate::error::{check_dim, PmtoError, Result};

type Points = Vec<Vec<f64>>;

/// Splits unit-cube inputs into (target task, other tasks) by exact match of the
/// trailing task coordinates.
fn partition(full: &TrainingSet, target_task: &[f64]) -> Result<(Points, Points)> {
    let d = full.dim();
    let td = target_task.len();
    if td == 0 || td >= d {
        return Err(PmtoError::InvalidArgument(format!(
            "task dimension {td} must be in 1..{d}"
        )));
    }
    let mut target = Vec::new();
    let mut rest = Vec::new();
    for x in &full.inputs {
        let u = full.input_bounds.to_unit(x);
        if x[d - td..] == *target_task {
            target.push(u);
        } else {
            rest.push(u);
        }
    }
    if target.is_empty() {
        return Err(PmtoError::InvalidArgument("no samples for the target task".into()));
    }
    Ok((target, rest))
}

fn half_log_det_i_plus(k: &DMatrix<f64>, noise: f64) -> Result<f64> {
    let n = k.nrows();
    let a = DMatrix::identity(n, n) + k / noise;
    let chol = a.cholesky().ok_or(PmtoError::NumericalFailure { jitter: 0.0 })?;
    Ok(chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum())
}

fn check(full: &TrainingSet, h: &GpHyperparams) -> Result<()> {
    h.validate()?;
    check_dim(full.dim(), h.dim())?;
    if h.noise_variance <= 0.0 {
        return Err(PmtoError::InvalidArgument(
            "information gain needs a positive noise variance".into(),
        ));
    }
    Ok(())
}

/// Information gain of the unified model about `target_task`, conditioned on
/// every other task's samples in `full`. Inputs are `(x, θ)` with `θ` trailing.
pub fn conditional_information_gain(full: &TrainingSet, target_task: &[f64], h: &GpHyperparams) -> Result<f64> {
    check(full, h)?;
    let (target, rest) = partition(full, target_task)?;
    let mut k_cond = kernel_matrix(&target, h);
    if !rest.is_empty() {
        let mut k_rest = kernel_matrix(&rest, h);
        for i in 0..rest.len() {
            k_rest[(i, i)] += h.noise_variance;
        }
        let b = DMatrix::from_fn(rest.len(), target.len(), |i, j| h.eval(&rest[i], &target[j]));
        let chol = k_rest.cholesky().ok_or(PmtoError::NumericalFailure { jitter: 0.0 })?;
        let mut v = b;
        chol.l_dirty().solve_lower_triangular_mut(&mut v);
        k_cond -= v.tr_mul(&v);
    }
    half_log_det_i_plus(&k_cond, h.noise_variance)
}

/// Information gain when only the target task's own samples are modeled.
pub fn independent_information_gain(full: &TrainingSet, target_task: &[f64], h: &GpHyperparams) -> Result<f64> {
    check(full, h)?;
    let (target, _) = partition(full, target_task)?;
    half_log_det_i_plus(&kernel_matrix(&target, h), h.noise_variance)
}
