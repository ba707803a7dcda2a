//! Upper-confidence-bound acquisition under the minimization convention.

use serde::{Deserialize, Serialize};

use crate::bounds::Bounds;
use crate::error::{PmtoError, Result};
use crate::gp::GpModel;
use crate::sampling::sobol_points;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AcquisitionConfig {
    pub beta: f64,
    pub candidate_count: usize,
    pub refine_steps: usize,
    pub seed: u64,
}

impl Default for AcquisitionConfig {
    fn default() -> Self {
        Self {
            beta: 1.0,
            candidate_count: 1024,
            refine_steps: 16,
            seed: 0,
        }
    }
}

impl AcquisitionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(PmtoError::InvalidConfig(format!(
                "beta must be >= 0, got {}",
                self.beta
            )));
        }
        if self.candidate_count == 0 {
            return Err(PmtoError::InvalidConfig("candidate_count must be >= 1".into()));
        }
        Ok(())
    }
}

fn model_input(x: &[f64], theta: Option<&[f64]>) -> Vec<f64> {
    match theta {
        Some(t) => x.iter().chain(t).copied().collect(),
        None => x.to_vec(),
    }
}

/// `−μ + β·σ` at `x` (joined with `θ` for a unified model); higher is better.
pub fn ucb_score(model: &GpModel, x: &[f64], theta: Option<&[f64]>, beta: f64) -> Result<f64> {
    let p = model.predict(&model_input(x, theta))?;
    Ok(-p.mean + beta * p.std_dev())
}

fn ucb_scores(model: &GpModel, xs: &[Vec<f64>], theta: Option<&[f64]>, beta: f64) -> Result<Vec<f64>> {
    let inputs: Vec<Vec<f64>> = xs.iter().map(|x| model_input(x, theta)).collect();
    Ok(model
        .predict_many(&inputs)?
        .into_iter()
        .map(|p| -p.mean + beta * p.std_dev())
        .collect())
}

/// Golden-section probes per coordinate line search.
const LINE_PROBES: usize = 6;
const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Maximizes UCB over `bounds` for a fixed task.
///
/// Scores `candidate_count` scrambled Sobol points, keeps the first best, then
/// runs `refine_steps` rounds of coordinate-wise golden-section search whose
/// bracket halves every round. Moves are taken only on strict improvement, so
/// the result scores at least as well as every candidate.
pub fn maximize_ucb(
    model: &GpModel,
    theta: Option<&[f64]>,
    bounds: &Bounds,
    cfg: &AcquisitionConfig,
) -> Result<Vec<f64>> {
    Ok(maximize_ucb_scored(model, theta, bounds, cfg)?.0)
}

/// As [`maximize_ucb`], also returning the final score.
pub fn maximize_ucb_scored(
    model: &GpModel,
    theta: Option<&[f64]>,
    bounds: &Bounds,
    cfg: &AcquisitionConfig,
) -> Result<(Vec<f64>, f64)> {
    cfg.validate()?;
    if !bounds.is_non_degenerate() {
        return Err(PmtoError::InvalidArgument("degenerate solution bounds".into()));
    }
    let candidates = sobol_points(cfg.candidate_count, bounds, cfg.seed);
    let scores = ucb_scores(model, &candidates, theta, cfg.beta)?;
    let mut best_i = 0;
    for (i, s) in scores.iter().enumerate() {
        if *s > scores[best_i] {
            best_i = i;
        }
    }
    let mut best = candidates[best_i].clone();
    let mut best_score = scores[best_i];

    let score = |x: &[f64]| ucb_score(model, x, theta, cfg.beta);
    let mut radius = 0.25;
    for _ in 0..cfg.refine_steps {
        for j in 0..bounds.dim() {
            let r = radius * bounds.width(j);
            let mut lo = (best[j] - r).max(bounds.lower[j]);
            let mut hi = (best[j] + r).min(bounds.upper[j]);
            let mut probe = best.clone();
            let at = |v: f64, probe: &mut Vec<f64>| -> Result<f64> {
                probe[j] = v;
                score(probe)
            };
            let mut c = hi - INV_PHI * (hi - lo);
            let mut d = lo + INV_PHI * (hi - lo);
            let mut fc = at(c, &mut probe)?;
            let mut fd = at(d, &mut probe)?;
            let mut line_best = if fc >= fd { (c, fc) } else { (d, fd) };
            for _ in 2..LINE_PROBES {
                if fc >= fd {
                    hi = d;
                    d = c;
                    fd = fc;
                    c = hi - INV_PHI * (hi - lo);
                    fc = at(c, &mut probe)?;
                    if fc > line_best.1 {
                        line_best = (c, fc);
                    }
                } else {
                    lo = c;
                    c = d;
                    fc = fd;
                    d = lo + INV_PHI * (hi - lo);
                    fd = at(d, &mut probe)?;
                    if fd > line_best.1 {
                        line_best = (d, fd);
                    }
                }
            }
            if line_best.1 > best_score {
                best[j] = line_best.0;
                best_score = line_best.1;
            }
        }
        radius *= 0.5;
    }
    bounds.clamp(&mut best);
    Ok((best, best_score))
}
