//! Hyperparameter fitting by Adam ascent on the log marginal likelihood.

use super::kernel::GpHyperparams;
use super::model::{fit_posterior, TrainingSet};
use super::NOISE_FLOOR;
use crate::error::{PmtoError, Result};

/// Box on the log-hyperparameters, applied after every step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub lengthscale_range: (f64, f64),
    pub signal_variance_range: (f64, f64),
    pub noise_range: (f64, f64),
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            lengthscale_range: (1e-3, 1e3),
            signal_variance_range: (1e-4, 1e4),
            noise_range: (NOISE_FLOOR, 1e2),
        }
    }
}

impl FitOptions {
    fn project(&self, eta: &mut [f64]) {
        let d = eta.len() - 2;
        let (llo, lhi) = (self.lengthscale_range.0.ln(), self.lengthscale_range.1.ln());
        for e in &mut eta[..d] {
            *e = e.clamp(llo, lhi);
        }
        eta[d] = eta[d].clamp(self.signal_variance_range.0.ln(), self.signal_variance_range.1.ln());
        eta[d + 1] = eta[d + 1].clamp(self.noise_range.0.ln(), self.noise_range.1.ln());
    }
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

/// Maximizes the log marginal likelihood over log-hyperparameters with Adam.
///
/// Returns the best iterate seen, so the result never scores below `init`
/// (after projection onto [`FitOptions`]). A failed evaluation reverts to the
/// last good iterate and halves the step; two failures in a row stop the fit.
pub fn fit_hyperparams(training: &TrainingSet, init: &GpHyperparams, epochs: usize, lr: f64) -> Result<GpHyperparams> {
    fit_hyperparams_with(training, init, epochs, lr, &FitOptions::default())
}

pub fn fit_hyperparams_with(
    training: &TrainingSet,
    init: &GpHyperparams,
    epochs: usize,
    lr: f64,
    opts: &FitOptions,
) -> Result<GpHyperparams> {
    if epochs == 0 {
        return Err(PmtoError::InvalidArgument("epochs must be at least 1".into()));
    }
    if !(lr > 0.0 && lr.is_finite()) {
        return Err(PmtoError::InvalidArgument(format!(
            "learning rate must be positive: {lr}"
        )));
    }
    init.validate()?;
    let mut eta = init.to_log();
    opts.project(&mut eta);
    let p = eta.len();

    let evaluate = |eta: &[f64]| -> Option<(f64, Vec<f64>)> {
        let h = GpHyperparams::from_log(eta);
        let model = fit_posterior(training, &h).ok()?;
        let (lml, grad) = model.log_marginal_likelihood().ok()?;
        (lml.is_finite() && grad.iter().all(|g| g.is_finite())).then_some((lml, grad))
    };

    let (mut best_lml, mut grad) = evaluate(&eta)
        .ok_or_else(|| PmtoError::NonFinite("log marginal likelihood at the initial hyperparameters".into()))?;
    let mut best = eta.clone();
    let mut last_good = eta.clone();
    let mut last_grad = grad.clone();
    let mut m = vec![0.0; p];
    let mut v = vec![0.0; p];
    let mut step = lr;
    let mut failures = 0;

    for t in 1..=epochs {
        let b1 = 1.0 - BETA1.powi(t as i32);
        let b2 = 1.0 - BETA2.powi(t as i32);
        for i in 0..p {
            m[i] = BETA1 * m[i] + (1.0 - BETA1) * grad[i];
            v[i] = BETA2 * v[i] + (1.0 - BETA2) * grad[i] * grad[i];
            eta[i] += step * (m[i] / b1) / ((v[i] / b2).sqrt() + EPS);
        }
        opts.project(&mut eta);
        match evaluate(&eta) {
            Some((lml, g)) => {
                failures = 0;
                if lml > best_lml {
                    best_lml = lml;
                    best.copy_from_slice(&eta);
                }
                last_good.copy_from_slice(&eta);
                last_grad.clone_from(&g);
                grad = g;
            }
            None => {
                failures += 1;
                if failures >= 2 {
                    break;
                }
                eta.copy_from_slice(&last_good);
                grad.clone_from(&last_grad);
                step *= 0.5;
            }
        }
    }
    Ok(GpHyperparams::from_log(&best))
}
