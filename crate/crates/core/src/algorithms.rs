//! Optimization loops: independent single-task GP search, fixed-task PMTO
//! with a unified surrogate, and task-evolving PMTO.
//!
//! Budgets are global: `n_tot` counts every true-objective evaluation of a
//! run. Within one outer iteration the unified GP is frozen while one
//! acquisition per task is maximized; hyperparameters are then warm-refit
//! once on the grown dataset.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::acquisition::{maximize_ucb, AcquisitionConfig};
use crate::bounds::Bounds;
use crate::error::{PmtoError, Result};
use crate::evolution::{evolve_task, EaConfig, TaskPool};
use crate::gp::{fit_hyperparams, fit_posterior, GpHyperparams, GpModel, TrainingSet};
use crate::problems::ProblemSpec;
use crate::sampling::{derive_seed, latin_hypercube, uniform_point};
use crate::task_model::{build_elite_set, filter_top_p, fit_task_model_with, EliteRecord, FitSchedule, TaskModel};

const STREAM_TASKS: u64 = 1;
const STREAM_INIT: u64 = 2;
const STREAM_ACQ: u64 = 3;
const STREAM_EA: u64 = 4;
const STREAM_RANDOM_TASK: u64 = 5;

/// One true-objective evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluatedSample {
    pub theta: Vec<f64>,
    pub x: Vec<f64>,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub n_init: usize,
    pub n_tot: usize,
    pub initial_tasks: usize,
    pub beta: f64,
    pub ea: EaConfig,
    /// Candidate pool and refinement settings; `beta` and `seed` are set per call.
    pub acquisition: AcquisitionConfig,
    pub seed: u64,
    pub refit_epochs_initial: usize,
    pub refit_epochs_warm: usize,
    pub learning_rate: f64,
    /// Percentage of elites kept for the final task model.
    pub top_p: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n_init: 200,
            n_tot: 2000,
            initial_tasks: 20,
            beta: 1.0,
            ea: EaConfig::default(),
            acquisition: AcquisitionConfig::default(),
            seed: 0,
            refit_epochs_initial: 500,
            refit_epochs_warm: 100,
            learning_rate: 0.01,
            top_p: 70.0,
        }
    }
}

impl RunConfig {
    /// Reduced budgets for quick runs: 10 tasks, 100 initial and 400 total evaluations.
    pub fn desk() -> Self {
        Self {
            n_init: 100,
            n_tot: 400,
            initial_tasks: 10,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(PmtoError::InvalidConfig(m));
        if self.initial_tasks == 0 {
            return bad("run.initial_tasks must be at least 1".into());
        }
        if self.n_init == 0 || !self.n_init.is_multiple_of(self.initial_tasks) {
            return bad(format!(
                "run.n_init ({}) must be a positive multiple of run.initial_tasks ({})",
                self.n_init, self.initial_tasks
            ));
        }
        if self.n_init > self.n_tot {
            return bad(format!(
                "run.n_init ({}) exceeds run.n_tot ({})",
                self.n_init, self.n_tot
            ));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return bad(format!("run.beta must be >= 0: {}", self.beta));
        }
        if self.refit_epochs_initial == 0 || self.refit_epochs_warm == 0 {
            return bad("run.refit_epochs_initial and run.refit_epochs_warm must be >= 1".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("run.learning_rate must be positive: {}", self.learning_rate));
        }
        if !(self.top_p > 0.0 && self.top_p <= 100.0) {
            return bad(format!("run.top_p must be in (0, 100]: {}", self.top_p));
        }
        self.ea.validate()?;
        self.acquisition_for(0)
            .validate()
            .map_err(|e| PmtoError::InvalidConfig(format!("run.acquisition: {e}")))
    }

    fn validate_fixed_tasks(&self, tasks: usize) -> Result<()> {
        self.validate()?;
        if tasks != self.initial_tasks {
            return Err(PmtoError::InvalidConfig(format!(
                "{tasks} tasks supplied but run.initial_tasks is {}",
                self.initial_tasks
            )));
        }
        if !self.n_tot.is_multiple_of(self.initial_tasks) {
            return Err(PmtoError::InvalidConfig(format!(
                "run.n_tot ({}) must be a multiple of run.initial_tasks ({}) for fixed-task runs",
                self.n_tot, self.initial_tasks
            )));
        }
        Ok(())
    }

    fn acquisition_for(&self, seed: u64) -> AcquisitionConfig {
        AcquisitionConfig {
            beta: self.beta,
            seed,
            ..self.acquisition.clone()
        }
    }

    fn acquisition_at(&self, iter: usize, task: usize) -> AcquisitionConfig {
        self.acquisition_for(derive_seed(self.seed, STREAM_ACQ, ((iter as u64) << 24) | task as u64))
    }

    fn schedule(&self) -> FitSchedule {
        FitSchedule {
            initial_epochs: self.refit_epochs_initial,
            warm_epochs: self.refit_epochs_warm,
            learning_rate: self.learning_rate,
        }
    }

    pub fn per_task_init(&self) -> usize {
        self.n_init / self.initial_tasks
    }
}

/// Where new tasks come from in [`run_pmto`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskSource {
    /// Maximize the determinant diversity objective.
    Evolved,
    /// Uniform random draw from the task box.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    /// Outer iteration; 0 for initialization.
    pub iter: usize,
    pub task_id: usize,
    pub theta: Vec<f64>,
    pub x: Vec<f64>,
    pub y: f64,
    /// Best objective of this task so far.
    pub best_so_far: f64,
    pub cum_evals: usize,
}

/// Every evaluation of a run in order, with per-task running minima.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub rows: Vec<TraceRow>,
    /// Task parameters by task id.
    pub tasks: Vec<Vec<f64>>,
}

impl RunTrace {
    fn task_id(&mut self, theta: &[f64]) -> usize {
        match self.tasks.iter().position(|t| t == theta) {
            Some(i) => i,
            None => {
                self.tasks.push(theta.to_vec());
                self.tasks.len() - 1
            }
        }
    }

    pub fn push(&mut self, iter: usize, sample: &EvaluatedSample) {
        let task_id = self.task_id(&sample.theta);
        let best_so_far = self
            .final_best(task_id)
            .map_or(sample.y, |b| if sample.y < b { sample.y } else { b });
        self.rows.push(TraceRow {
            iter,
            task_id,
            theta: sample.theta.clone(),
            x: sample.x.clone(),
            y: sample.y,
            best_so_far,
            cum_evals: self.rows.len() + 1,
        });
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Objective values of one task in evaluation order.
    pub fn task_values(&self, task_id: usize) -> Vec<f64> {
        self.rows.iter().filter(|r| r.task_id == task_id).map(|r| r.y).collect()
    }

    pub fn final_best(&self, task_id: usize) -> Option<f64> {
        self.rows
            .iter()
            .rev()
            .find(|r| r.task_id == task_id)
            .map(|r| r.best_so_far)
    }

    /// Final best-so-far of every task, by task id.
    pub fn final_best_all(&self) -> Vec<f64> {
        (0..self.tasks.len())
            .map(|m| self.final_best(m).unwrap_or(f64::INFINITY))
            .collect()
    }

    pub fn evaluations_per_task(&self) -> Vec<usize> {
        let mut counts = vec![0; self.tasks.len()];
        for r in &self.rows {
            counts[r.task_id] += 1;
        }
        counts
    }

    /// CSV with columns `iter, task_id, theta_*, x_*, y, best_so_far, cum_evals`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let td = self.tasks.first().map_or(0, Vec::len);
        let xd = self.rows.first().map_or(0, |r| r.x.len());
        let mut header = vec!["iter".to_string(), "task_id".to_string()];
        header.extend((0..td).map(|i| format!("theta_{i}")));
        header.extend((0..xd).map(|i| format!("x_{i}")));
        header.extend(["y", "best_so_far", "cum_evals"].map(String::from));
        w.write_record(&header)?;
        for r in &self.rows {
            let mut rec = vec![r.iter.to_string(), r.task_id.to_string()];
            rec.extend(r.theta.iter().map(f64::to_string));
            rec.extend(r.x.iter().map(f64::to_string));
            rec.extend([r.y.to_string(), r.best_so_far.to_string(), r.cum_evals.to_string()]);
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| PmtoError::InvalidState(e.to_string()))
    }
}

/// Everything a run leaves behind.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub trace: RunTrace,
    pub dataset: Vec<EvaluatedSample>,
    pub pool: TaskPool,
    pub elites: Vec<EliteRecord>,
    /// The task model fitted on the top-p elites.
    pub task_model: TaskModel,
    /// Hyperparameters of the last unified surrogate, when one was used.
    pub surrogate: Option<GpHyperparams>,
}

/// Latin hypercube sample of the initial tasks.
pub fn initial_tasks(problem: &ProblemSpec, cfg: &RunConfig) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, STREAM_TASKS, 0));
    latin_hypercube(cfg.initial_tasks, &problem.task_bounds, &mut rng)
}

/// Latin hypercube initial solutions of task `m`; shared by every algorithm.
fn initial_solutions(problem: &ProblemSpec, cfg: &RunConfig, m: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, STREAM_INIT, m as u64));
    latin_hypercube(cfg.per_task_init(), &problem.solution_bounds, &mut rng)
}

fn fit_gp(set: &TrainingSet, warm: Option<&GpHyperparams>, cfg: &RunConfig) -> Result<GpHyperparams> {
    match warm {
        Some(h) => fit_hyperparams(set, h, cfg.refit_epochs_warm, cfg.learning_rate),
        None => fit_hyperparams(
            set,
            &GpHyperparams::initial(set.dim()),
            cfg.refit_epochs_initial,
            cfg.learning_rate,
        ),
    }
}

fn joined(x: &[f64], theta: &[f64]) -> Vec<f64> {
    x.iter().chain(theta).copied().collect()
}

/// Fits the online task model on the top-p elites.
pub fn fit_online_model(
    elites: &[EliteRecord],
    problem: &ProblemSpec,
    cfg: &RunConfig,
    warm: Option<&[GpHyperparams]>,
) -> Result<TaskModel> {
    let kept = filter_top_p(elites, cfg.top_p)?;
    if kept.len() < 2 {
        return Err(PmtoError::InvalidConfig(format!(
            "run.top_p = {} keeps {} of {} elites; the task model needs 2",
            cfg.top_p,
            kept.len(),
            elites.len()
        )));
    }
    fit_task_model_with(
        &kept,
        &problem.solution_bounds,
        &problem.task_bounds,
        &cfg.schedule(),
        warm,
    )
}

/// Independent GP search per task, each with `n_tot / M` evaluations.
pub fn run_single_task_baseline(problem: &ProblemSpec, tasks: &[Vec<f64>], cfg: &RunConfig) -> Result<RunOutcome> {
    cfg.validate_fixed_tasks(tasks.len())?;
    for t in tasks {
        if !problem.task_bounds.contains(t) {
            return Err(PmtoError::InvalidArgument(format!("task {t:?} outside the task box")));
        }
    }
    let budget = cfg.n_tot / cfg.initial_tasks;
    let sb = &problem.solution_bounds;

    let per_task: Vec<Vec<(usize, EvaluatedSample)>> = tasks
        .par_iter()
        .enumerate()
        .map(|(m, theta)| -> Result<Vec<(usize, EvaluatedSample)>> {
            let mut log = Vec::with_capacity(budget);
            let mut set = TrainingSet::new(sb.clone());
            for x in initial_solutions(problem, cfg, m) {
                let y = problem.evaluate(&x, theta)?;
                set.push(x.clone(), y)?;
                log.push((
                    0,
                    EvaluatedSample {
                        theta: theta.clone(),
                        x,
                        y,
                    },
                ));
            }
            let mut hyper: Option<GpHyperparams> = None;
            let mut iter = 0;
            while log.len() < budget {
                iter += 1;
                let h = fit_gp(&set, hyper.as_ref(), cfg)?;
                let model = fit_posterior(&set, &h)?;
                hyper = Some(h);
                let x = maximize_ucb(&model, None, sb, &cfg.acquisition_at(iter, m))?;
                let y = problem.evaluate(&x, theta)?;
                set.push(x.clone(), y)?;
                log.push((
                    iter,
                    EvaluatedSample {
                        theta: theta.clone(),
                        x,
                        y,
                    },
                ));
            }
            Ok(log)
        })
        .collect::<Result<_>>()?;

    let mut trace = RunTrace::default();
    let mut dataset = Vec::with_capacity(cfg.n_tot);
    for theta in tasks {
        trace.task_id(theta);
    }
    for log in per_task {
        for (iter, s) in log {
            trace.push(iter, &s);
            dataset.push(s);
        }
    }
    let pool = TaskPool::new(tasks.to_vec());
    let elites = build_elite_set(&dataset, &pool)?;
    let task_model = fit_online_model(&elites, problem, cfg, None)?;
    Ok(RunOutcome {
        trace,
        dataset,
        pool,
        elites,
        task_model,
        surrogate: None,
    })
}

/// Shared state of the unified-surrogate loops.
struct Unified<'a> {
    problem: &'a ProblemSpec,
    cfg: &'a RunConfig,
    trace: RunTrace,
    dataset: Vec<EvaluatedSample>,
    set: TrainingSet,
    hyper: Option<GpHyperparams>,
}

impl<'a> Unified<'a> {
    fn new(problem: &'a ProblemSpec, cfg: &'a RunConfig) -> Self {
        Self {
            problem,
            cfg,
            trace: RunTrace::default(),
            dataset: Vec::with_capacity(cfg.n_tot),
            set: TrainingSet::new(problem.solution_bounds.product(&problem.task_bounds)),
            hyper: None,
        }
    }

    fn remaining(&self) -> usize {
        self.cfg.n_tot - self.dataset.len()
    }

    fn evaluate(&mut self, iter: usize, theta: &[f64], x: Vec<f64>) -> Result<()> {
        let y = self.problem.evaluate(&x, theta)?;
        self.set.push(joined(&x, theta), y)?;
        let s = EvaluatedSample {
            theta: theta.to_vec(),
            x,
            y,
        };
        self.trace.push(iter, &s);
        self.dataset.push(s);
        Ok(())
    }

    fn initialize(&mut self, tasks: &[Vec<f64>]) -> Result<()> {
        for (m, theta) in tasks.iter().enumerate() {
            self.trace.task_id(theta);
            for x in initial_solutions(self.problem, self.cfg, m) {
                self.evaluate(0, theta, x)?;
            }
        }
        Ok(())
    }

    fn refit(&mut self) -> Result<GpModel> {
        let h = fit_gp(&self.set, self.hyper.as_ref(), self.cfg)?;
        let model = fit_posterior(&self.set, &h)?;
        self.hyper = Some(h);
        Ok(model)
    }

    /// One acquisition per task against the frozen `model`, evaluated in task
    /// order until the budget runs out. Returns how many were evaluated.
    fn acquire_round(&mut self, model: &GpModel, iter: usize, tasks: &[Vec<f64>]) -> Result<usize> {
        let take = tasks.len().min(self.remaining());
        let sb = &self.problem.solution_bounds;
        let cfg = self.cfg;
        let xs: Vec<Vec<f64>> = tasks[..take]
            .par_iter()
            .enumerate()
            .map(|(m, theta)| maximize_ucb(model, Some(theta), sb, &cfg.acquisition_at(iter, m)))
            .collect::<Result<_>>()?;
        for (theta, x) in tasks.iter().zip(xs) {
            self.evaluate(iter, theta, x)?;
        }
        Ok(take)
    }
}

/// Fixed-task PMTO: one unified GP over `(x, θ)` shared by every task.
pub fn run_pmto_ft(problem: &ProblemSpec, tasks: &[Vec<f64>], cfg: &RunConfig) -> Result<RunOutcome> {
    cfg.validate_fixed_tasks(tasks.len())?;
    for t in tasks {
        if !problem.task_bounds.contains(t) {
            return Err(PmtoError::InvalidArgument(format!("task {t:?} outside the task box")));
        }
    }
    let mut run = Unified::new(problem, cfg);
    run.initialize(tasks)?;
    let mut iter = 0;
    while run.remaining() > 0 {
        iter += 1;
        let model = run.refit()?;
        run.acquire_round(&model, iter, tasks)?;
    }
    let pool = TaskPool::new(tasks.to_vec());
    let elites = build_elite_set(&run.dataset, &pool)?;
    let task_model = fit_online_model(&elites, problem, cfg, None)?;
    Ok(RunOutcome {
        trace: run.trace,
        dataset: run.dataset,
        pool,
        elites,
        task_model,
        surrogate: run.hyper,
    })
}

/// Task-evolving PMTO: every outer iteration adds one task (evolved for
/// diversity or drawn at random) and acquires one point for every pool task.
pub fn run_pmto(problem: &ProblemSpec, cfg: &RunConfig, source: TaskSource) -> Result<RunOutcome> {
    run_pmto_observed(problem, cfg, source, |_, _| {})
}

/// As [`run_pmto`], calling `observe(iter, pool)` after every outer iteration.
pub fn run_pmto_observed<F: FnMut(usize, &TaskPool)>(
    problem: &ProblemSpec,
    cfg: &RunConfig,
    source: TaskSource,
    mut observe: F,
) -> Result<RunOutcome> {
    cfg.validate()?;
    if cfg.initial_tasks < 2 {
        return Err(PmtoError::InvalidConfig(
            "run.initial_tasks must be at least 2 for the task model".into(),
        ));
    }
    let tb = &problem.task_bounds;
    let mut pool = TaskPool::new(initial_tasks(problem, cfg));
    let mut run = Unified::new(problem, cfg);
    run.initialize(&pool.thetas)?;
    let schedule = cfg.schedule();
    let mut elites = build_elite_set(&run.dataset, &pool)?;
    let mut model_m = fit_task_model_with(&elites, &problem.solution_bounds, tb, &schedule, None)?;
    let mut random = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, STREAM_RANDOM_TASK, 0));

    let mut iter = 0;
    while run.remaining() > 0 {
        iter += 1;
        let theta_new = match source {
            TaskSource::Evolved => {
                let ea = EaConfig {
                    seed: derive_seed(cfg.seed, STREAM_EA, iter as u64),
                    ..cfg.ea.clone()
                };
                evolve_task(&pool, &model_m, tb, &ea)?
            }
            TaskSource::Random => uniform_point(tb, &mut random),
        };
        pool.push(theta_new);
        let model = run.refit()?;
        let done = run.acquire_round(&model, iter, &pool.thetas)?;
        if done < pool.len() {
            pool.thetas.pop();
        }
        elites = build_elite_set(&run.dataset, &pool)?;
        let warm = model_m.hyperparams();
        model_m = fit_task_model_with(&elites, &problem.solution_bounds, tb, &schedule, Some(&warm))?;
        observe(iter, &pool);
    }
    let task_model = fit_online_model(&elites, problem, cfg, Some(&model_m.hyperparams()))?;
    Ok(RunOutcome {
        trace: run.trace,
        dataset: run.dataset,
        pool,
        elites,
        task_model,
        surrogate: run.hyper,
    })
}

/// Per-task instantaneous and cumulative regret, by task id.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretCurves {
    pub instantaneous: Vec<Vec<f64>>,
    pub cumulative: Vec<Vec<f64>>,
}

/// Regret of every evaluation against the known optimum of its task.
pub fn compute_regret(trace: &RunTrace, optima: &[f64]) -> Result<RegretCurves> {
    if optima.len() != trace.tasks.len() {
        return Err(PmtoError::DimensionMismatch {
            expected: trace.tasks.len(),
            got: optima.len(),
        });
    }
    let mut instantaneous = vec![Vec::new(); optima.len()];
    for r in &trace.rows {
        let regret = r.y - optima[r.task_id];
        if regret < -1e-9 {
            return Err(PmtoError::Consistency(format!(
                "negative regret {regret} for task {} at evaluation {}: optimum {} is wrong",
                r.task_id, r.cum_evals, optima[r.task_id]
            )));
        }
        instantaneous[r.task_id].push(regret);
    }
    let cumulative = instantaneous
        .iter()
        .map(|rs| {
            rs.iter()
                .scan(0.0, |acc, r| {
                    *acc += r;
                    Some(*acc)
                })
                .collect()
        })
        .collect();
    Ok(RegretCurves {
        instantaneous,
        cumulative,
    })
}

/// Known optimal values of every traced task.
pub fn known_optima(problem: &ProblemSpec, trace: &RunTrace) -> Result<Vec<f64>> {
    trace
        .tasks
        .iter()
        .map(|t| problem.known_optimum(t).map(|(_, f)| f))
        .collect()
}

/// Solution bounds joined with task bounds, the input box of the unified GP.
pub fn unified_bounds(problem: &ProblemSpec) -> Bounds {
    problem.solution_bounds.product(&problem.task_bounds)
}
