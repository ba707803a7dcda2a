//! Online evaluation of task models and the minimax robust-design pipeline.
//!
//! A task model is scored on a grid of task parameters by evaluating the true
//! objective at its predicted solutions, `F(θ_k) = f(M(θ_k), θ_k)`; the
//! quantiles of `F` per trial, averaged over trials, summarize it.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algorithms::{run_pmto, RunConfig, RunOutcome, TaskSource};
use crate::bounds::Bounds;
use crate::error::{check_dim, PmtoError, Result};
use crate::evolution::{evolve, EaConfig};
use crate::problems::{truss_evaluate_clamped, Objective, ProblemSpec, TrussSpec};
use crate::sampling::{derive_seed, sobol_points, uniform_point, uniform_points};
use crate::task_model::TaskModel;

/// Quantile levels reported for every run.
pub const ALPHAS: [f64; 5] = [0.05, 0.25, 0.50, 0.75, 0.95];

/// Default number of random processing errors in a robustness check.
pub const DEFAULT_ROBUSTNESS_SAMPLES: usize = 800;

/// Task parameters at which a task model is scored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalGrid {
    pub thetas: Vec<Vec<f64>>,
    pub scheme: String,
    pub seed: u64,
}

impl EvalGrid {
    /// `k` scrambled Sobol points over `bounds`.
    pub fn sobol(bounds: &Bounds, k: usize, seed: u64) -> Self {
        Self {
            thetas: sobol_points(k, bounds, seed),
            scheme: "sobol".into(),
            seed,
        }
    }

    /// `k` independent uniform points over `bounds`.
    pub fn uniform(bounds: &Bounds, k: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self {
            thetas: uniform_points(k, bounds, &mut rng),
            scheme: "uniform".into(),
            seed,
        }
    }

    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }
}

/// `F(θ_k) = f(M(θ_k), θ_k)` at every grid point.
pub fn evaluate_task_model(model: &TaskModel, problem: &ProblemSpec, grid: &EvalGrid) -> Result<Vec<f64>> {
    check_dim(problem.task_dim(), model.task_bounds().dim())?;
    check_dim(problem.solution_dim(), model.solution_bounds().dim())?;
    grid.thetas
        .par_iter()
        .map(|t| problem.evaluate(&model.predict_solution(t)?, t))
        .collect()
}

/// Linear-interpolation quantiles: position `α (n − 1)` in the sorted values.
pub fn quantiles(values: &[f64], alphas: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(PmtoError::InvalidArgument("quantiles of an empty vector".into()));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(PmtoError::NonFinite("NaN in quantile input".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    alphas
        .iter()
        .map(|&a| {
            if !(0.0..=1.0).contains(&a) {
                return Err(PmtoError::InvalidArgument(format!(
                    "quantile level outside [0, 1]: {a}"
                )));
            }
            let pos = a * (n - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = (lo + 1).min(n - 1);
            let frac = pos - lo as f64;
            Ok(sorted[lo] + frac * (sorted[hi] - sorted[lo]))
        })
        .collect()
}

/// Per-trial quantiles and their cross-trial mean and sample standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileReport {
    pub alphas: Vec<f64>,
    /// `per_trial[u][i]` is the `alphas[i]` quantile of trial `u`.
    pub per_trial: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    /// Grid size.
    pub k: usize,
}

impl QuantileReport {
    pub fn trials(&self) -> usize {
        self.per_trial.len()
    }

    /// Cross-trial mean at level `alpha`, if reported.
    pub fn mean_at(&self, alpha: f64) -> Option<f64> {
        self.alphas
            .iter()
            .position(|a| (a - alpha).abs() < 1e-12)
            .map(|i| self.mean[i])
    }

    /// CSV with header `problem, algorithm, alpha, mean, std, U, K, seed`.
    pub fn write_csv<W: Write>(&self, out: W, problem: &str, algorithm: &str, seed: u64) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["problem", "algorithm", "alpha", "mean", "std", "U", "K", "seed"])?;
        for (i, a) in self.alphas.iter().enumerate() {
            w.write_record([
                problem.to_string(),
                algorithm.to_string(),
                a.to_string(),
                self.mean[i].to_string(),
                self.std[i].to_string(),
                self.trials().to_string(),
                self.k.to_string(),
                seed.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// CSV of the raw per-trial values: `problem, algorithm, trial, seed, alpha, value`.
    pub fn write_trials_csv<W: Write>(&self, out: W, problem: &str, algorithm: &str, seeds: &[u64]) -> Result<()> {
        check_dim(self.trials(), seeds.len())?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["problem", "algorithm", "trial", "seed", "alpha", "value"])?;
        for (u, row) in self.per_trial.iter().enumerate() {
            for (a, v) in self.alphas.iter().zip(row) {
                w.write_record([
                    problem.to_string(),
                    algorithm.to_string(),
                    u.to_string(),
                    seeds[u].to_string(),
                    a.to_string(),
                    v.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Mean and sample standard deviation (zero for one trial) per level.
pub fn aggregate_trials(per_trial: &[Vec<f64>], alphas: &[f64], k: usize) -> Result<QuantileReport> {
    if per_trial.is_empty() {
        return Err(PmtoError::InvalidArgument("no trials to aggregate".into()));
    }
    for row in per_trial {
        check_dim(alphas.len(), row.len())?;
    }
    let u = per_trial.len() as f64;
    let mean: Vec<f64> = (0..alphas.len())
        .map(|i| per_trial.iter().map(|r| r[i]).sum::<f64>() / u)
        .collect();
    let std = (0..alphas.len())
        .map(|i| {
            if per_trial.len() < 2 {
                0.0
            } else {
                (per_trial.iter().map(|r| (r[i] - mean[i]).powi(2)).sum::<f64>() / (u - 1.0)).sqrt()
            }
        })
        .collect();
    Ok(QuantileReport {
        alphas: alphas.to_vec(),
        per_trial: per_trial.to_vec(),
        mean,
        std,
        k,
    })
}

/// Outcome of the minimax pipeline.
#[derive(Debug, Clone)]
pub struct MinimaxOutcome {
    /// The design minimizing the predicted worst-case objective.
    pub design: Vec<f64>,
    /// `f(M(θ̂), θ̂)` at the returned design.
    pub predicted_worst: f64,
    /// The inner run that learned the worst-case error predictor.
    pub inner: RunOutcome,
    pub inner_evaluations: usize,
    pub outer_evaluations: usize,
    /// Best value after initialization and after every outer generation.
    pub outer_trace: Vec<f64>,
}

fn truss_of(problem: &ProblemSpec) -> Result<TrussSpec> {
    match &problem.objective {
        Objective::TrussMinimax { spec } => Ok(spec.clone()),
        _ => Err(PmtoError::InvalidConfig(format!(
            "minimax needs the truss-minimax problem, got `{}`",
            problem.name
        ))),
    }
}

/// Generations that fit `budget` evaluations at population `p`, capped by `cap`.
fn generations_for(budget: usize, p: usize, cap: usize) -> Result<usize> {
    if budget < 2 * p {
        return Err(PmtoError::InvalidConfig(format!(
            "outer budget {budget} cannot pay for the initial population and one generation of {p}"
        )));
    }
    Ok(((budget - p) / p).min(cap))
}

/// Minimizes `objective` over `bounds` with the evolutionary search, spending
/// at most `budget` evaluations.
pub fn minimize_with_budget<F>(
    bounds: &Bounds,
    cfg: &EaConfig,
    budget: usize,
    objective: F,
) -> Result<(Vec<f64>, f64, usize, Vec<f64>)>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    cfg.validate()?;
    let generations = generations_for(budget, cfg.population_size, cfg.generations)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let initial = (0..cfg.population_size)
        .map(|_| uniform_point(bounds, &mut rng))
        .collect();
    let out = evolve(
        initial,
        bounds,
        cfg,
        generations,
        |t| objective(t).map(|v| -v),
        &mut rng,
    )?;
    let trace = out.trace.iter().map(|v| -v).collect();
    Ok((out.best, -out.best_fitness, out.evaluations, trace))
}

/// Learns a worst-case error predictor with task-evolving PMTO on the negated
/// truss, then minimizes `h(θ) = f(M(θ), θ)` over designs within `outer_budget`.
pub fn solve_minimax(
    problem: &ProblemSpec,
    pmto_cfg: &RunConfig,
    outer_cfg: &EaConfig,
    outer_budget: usize,
) -> Result<MinimaxOutcome> {
    let spec = truss_of(problem)?;
    generations_for(outer_budget, outer_cfg.population_size, outer_cfg.generations)?;
    let inner = run_pmto(problem, pmto_cfg, TaskSource::Evolved)?;
    let model = &inner.task_model;
    let h = |theta: &[f64]| truss_evaluate_clamped(&spec, &model.predict_solution(theta)?, theta);
    let (design, predicted_worst, outer_evaluations, outer_trace) =
        minimize_with_budget(&problem.task_bounds, outer_cfg, outer_budget, h)?;
    Ok(MinimaxOutcome {
        design,
        predicted_worst,
        inner_evaluations: inner.trace.len(),
        inner,
        outer_evaluations,
        outer_trace,
    })
}

/// The design minimizing the error-free objective `f(0, θ)` within `budget`.
pub fn nominal_design(spec: &TrussSpec, cfg: &EaConfig, budget: usize) -> Result<(Vec<f64>, f64, usize)> {
    let zero = [0.0; 3];
    let (d, v, n, _) = minimize_with_budget(&spec.design_bounds(), cfg, budget, |t| {
        truss_evaluate_clamped(spec, &zero, t)
    })?;
    Ok((d, v, n))
}

/// Objective values of one design under random processing errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessSummary {
    pub errors: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub min: f64,
    pub mean: f64,
    pub max: f64,
    pub quantiles: Vec<f64>,
}

/// The `n_errors` uniform error vectors used by [`assess_robustness`] under `seed`.
pub fn robustness_errors(spec: &TrussSpec, n_errors: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0x0E77, 0));
    let b = spec.error_bounds();
    (0..n_errors).map(|_| uniform_point(&b, &mut rng)).collect()
}

/// Evaluates `theta` under `n_errors` uniform random errors; the same seed
/// gives the same errors for every design.
pub fn assess_robustness(theta: &[f64], spec: &TrussSpec, n_errors: usize, seed: u64) -> Result<RobustnessSummary> {
    if n_errors == 0 {
        return Err(PmtoError::InvalidArgument("n_errors must be at least 1".into()));
    }
    let errors = robustness_errors(spec, n_errors, seed);
    let values = errors
        .iter()
        .map(|e| truss_evaluate_clamped(spec, e, theta))
        .collect::<Result<Vec<_>>>()?;
    let q = quantiles(&values, &ALPHAS)?;
    Ok(RobustnessSummary {
        min: values.iter().copied().fold(f64::INFINITY, f64::min),
        max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        mean: values.iter().sum::<f64>() / values.len() as f64,
        quantiles: q,
        errors,
        values,
    })
}
