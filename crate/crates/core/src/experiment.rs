//! Config-driven experiments: trial loops, seeding and result files.
//!
//! An experiment directory holds `trace_trial{u}.csv`, `taskmodel_trial{u}.json`,
//! `quantiles.csv`, `quantiles_trials.csv` and `manifest.json`; synthetic
//! problems also get `regret_trial{u}.csv`. Everything except the manifest's
//! timing fields is a pure function of the config.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::algorithms::{
    compute_regret, initial_tasks, known_optima, run_pmto, run_pmto_ft, run_single_task_baseline, RunConfig,
    RunOutcome, TaskSource,
};
use crate::error::{PmtoError, Result};
use crate::evaluation::{
    aggregate_trials, assess_robustness, evaluate_task_model, nominal_design, quantiles, solve_minimax, EvalGrid,
    QuantileReport, RobustnessSummary, ALPHAS, DEFAULT_ROBUSTNESS_SAMPLES,
};
use crate::evolution::EaConfig;
use crate::problems::ProblemSpec;
use crate::sampling::derive_seed;
use crate::task_model::TaskModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Baseline,
    PmtoFt,
    Pmto,
    PmtoRt,
}

impl Algorithm {
    pub const NAMES: [&'static str; 4] = ["baseline", "pmto-ft", "pmto", "pmto-rt"];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Baseline => "baseline",
            Algorithm::PmtoFt => "pmto-ft",
            Algorithm::Pmto => "pmto",
            Algorithm::PmtoRt => "pmto-rt",
        }
    }
}

/// Runs `algorithm` once under `cfg` (whose seed selects the trial).
pub fn run_algorithm(problem: &ProblemSpec, algorithm: Algorithm, cfg: &RunConfig) -> Result<RunOutcome> {
    match algorithm {
        Algorithm::Baseline => run_single_task_baseline(problem, &initial_tasks(problem, cfg), cfg),
        Algorithm::PmtoFt => run_pmto_ft(problem, &initial_tasks(problem, cfg), cfg),
        Algorithm::Pmto => run_pmto(problem, cfg, TaskSource::Evolved),
        Algorithm::PmtoRt => run_pmto(problem, cfg, TaskSource::Random),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridScheme {
    Sobol,
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    /// Grid size; when absent, 10⁴ for task spaces up to 2-D and 10⁵ above.
    pub size: Option<usize>,
    pub scheme: GridScheme,
    pub seed: u64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            size: None,
            scheme: GridScheme::Sobol,
            seed: 2024,
        }
    }
}

impl GridConfig {
    pub fn build(&self, problem: &ProblemSpec) -> EvalGrid {
        let k = self
            .size
            .unwrap_or(if problem.task_dim() <= 2 { 10_000 } else { 100_000 });
        match self.scheme {
            GridScheme::Sobol => EvalGrid::sobol(&problem.task_bounds, k, self.seed),
            GridScheme::Uniform => EvalGrid::uniform(&problem.task_bounds, k, self.seed),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MinimaxConfig {
    /// Evaluations shared by the inner run and the outer design search.
    pub total_budget: usize,
    /// Share of `total_budget` given to the inner run.
    pub inner_fraction: f64,
    pub outer: EaConfig,
    pub n_errors: usize,
}

impl Default for MinimaxConfig {
    fn default() -> Self {
        Self {
            total_budget: 1000,
            inner_fraction: 0.7,
            outer: EaConfig {
                population_size: 50,
                ..EaConfig::default()
            },
            n_errors: DEFAULT_ROBUSTNESS_SAMPLES,
        }
    }
}

impl MinimaxConfig {
    /// `(inner, outer)` evaluation budgets.
    pub fn split(&self) -> Result<(usize, usize)> {
        if !(self.inner_fraction > 0.0 && self.inner_fraction < 1.0) {
            return Err(PmtoError::InvalidConfig(format!(
                "minimax.inner_fraction must be in (0, 1): {}",
                self.inner_fraction
            )));
        }
        let inner = (self.total_budget as f64 * self.inner_fraction).round() as usize;
        Ok((inner, self.total_budget - inner))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: String,
    /// JSON object merged into the problem's constants.
    pub problem_overrides: Value,
    pub algorithm: Algorithm,
    pub run: RunConfig,
    pub trials: usize,
    pub grid: GridConfig,
    pub output_dir: PathBuf,
    pub minimax: MinimaxConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            problem: String::new(),
            problem_overrides: json!({}),
            algorithm: Algorithm::Pmto,
            run: RunConfig::default(),
            trials: 1,
            grid: GridConfig::default(),
            output_dir: PathBuf::from("results"),
            minimax: MinimaxConfig::default(),
        }
    }
}

/// Sets `value` at the dotted `key`, creating intermediate objects. The value
/// is parsed as JSON when possible and kept as a string otherwise.
pub fn apply_override(doc: &mut Value, key: &str, value: &str) -> Result<()> {
    let parsed = serde_json::from_str(value).unwrap_or_else(|_| Value::String(value.to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(PmtoError::InvalidConfig(format!("bad override key `{key}`")));
    }
    let mut node = doc;
    for part in &parts[..parts.len() - 1] {
        if !node.is_object() {
            return Err(PmtoError::InvalidConfig(format!(
                "override `{key}`: `{part}` is not a table"
            )));
        }
        node = node
            .as_object_mut()
            .expect("checked object")
            .entry(part.to_string())
            .or_insert_with(|| json!({}));
    }
    match node.as_object_mut() {
        Some(map) => {
            map.insert(parts[parts.len() - 1].to_string(), parsed);
            Ok(())
        }
        None => Err(PmtoError::InvalidConfig(format!(
            "override `{key}` targets a non-table"
        ))),
    }
}

/// Parses `key=value` into its parts.
pub fn split_assignment(s: &str) -> Result<(&str, &str)> {
    s.split_once('=')
        .ok_or_else(|| PmtoError::InvalidConfig(format!("override `{s}` is not of the form key=value")))
}

impl ExperimentConfig {
    /// Builds a config from a JSON document, naming the offending key on error.
    pub fn from_value(doc: Value) -> Result<Self> {
        if let Some(a) = doc.get("algorithm") {
            if !a.as_str().is_some_and(|s| Algorithm::NAMES.contains(&s)) {
                return Err(PmtoError::InvalidConfig(format!(
                    "algorithm: unknown value {a} (known: {})",
                    Algorithm::NAMES.join(", ")
                )));
            }
        }
        let cfg: Self = serde_json::from_value(doc).map_err(|e| PmtoError::InvalidConfig(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads an optional JSON file, applies `key=value` overrides, then validates.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut doc = match path {
            Some(p) => serde_json::from_str(&fs::read_to_string(p)?)
                .map_err(|e| PmtoError::InvalidConfig(format!("{}: {e}", p.display())))?,
            None => json!({}),
        };
        for o in overrides {
            let (k, v) = split_assignment(o)?;
            apply_override(&mut doc, k, v)?;
        }
        Self::from_value(doc)
    }

    pub fn validate(&self) -> Result<()> {
        if self.problem.is_empty() {
            return Err(PmtoError::InvalidConfig("problem: missing problem name".into()));
        }
        self.problem_spec()?;
        if self.trials == 0 {
            return Err(PmtoError::InvalidConfig("trials must be at least 1".into()));
        }
        if self.grid.size == Some(0) {
            return Err(PmtoError::InvalidConfig("grid.size must be at least 1".into()));
        }
        self.run.validate()
    }

    pub fn problem_spec(&self) -> Result<ProblemSpec> {
        ProblemSpec::by_name_with(&self.problem, &self.problem_overrides)
    }

    pub fn trial_seed(&self, trial: usize) -> u64 {
        self.run.seed.wrapping_add(trial as u64)
    }
}

fn prepare_output(dir: &Path, force: bool) -> Result<()> {
    if dir.exists() {
        let occupied = fs::read_dir(dir)?.next().is_some();
        if occupied && !force {
            return Err(PmtoError::InvalidConfig(format!(
                "output_dir: {} is not empty; pass --force to overwrite",
                dir.display()
            )));
        }
    } else {
        fs::create_dir_all(dir)?;
    }
    Ok(())
}

fn git_revision() -> Option<String> {
    let out = std::process::Command::new("git")
        .args(["rev-parse", "HEAD"])
        .output()
        .ok()?;
    out.status
        .success()
        .then(|| String::from_utf8_lossy(&out.stdout).trim().to_string())
}

fn unix_time() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

fn write_json(path: &Path, value: &Value) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

fn write_regret(path: &Path, problem: &ProblemSpec, outcome: &RunOutcome) -> Result<()> {
    let optima = known_optima(problem, &outcome.trace)?;
    let curves = compute_regret(&outcome.trace, &optima)?;
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    w.write_record(["task_id", "step", "regret", "cumulative_regret"])?;
    for (m, (inst, cum)) in curves.instantaneous.iter().zip(&curves.cumulative).enumerate() {
        for (t, (r, c)) in inst.iter().zip(cum).enumerate() {
            w.write_record([m.to_string(), (t + 1).to_string(), r.to_string(), c.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Result of [`run_experiment`].
#[derive(Debug, Clone)]
pub struct ExperimentSummary {
    pub report: QuantileReport,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
}

/// Runs every trial and writes the experiment directory.
pub fn run_experiment(cfg: &ExperimentConfig, force: bool) -> Result<ExperimentSummary> {
    cfg.validate()?;
    let started = Instant::now();
    let started_at = unix_time();
    let problem = cfg.problem_spec()?;
    let dir = &cfg.output_dir;
    prepare_output(dir, force)?;
    let grid = cfg.grid.build(&problem);

    let mut per_trial = Vec::with_capacity(cfg.trials);
    let mut seeds = Vec::with_capacity(cfg.trials);
    let mut trials = Vec::with_capacity(cfg.trials);
    for u in 0..cfg.trials {
        let seed = cfg.trial_seed(u);
        let run_cfg = RunConfig {
            seed,
            ..cfg.run.clone()
        };
        let outcome = run_algorithm(&problem, cfg.algorithm, &run_cfg)?;
        outcome
            .trace
            .write_csv(BufWriter::new(File::create(dir.join(format!("trace_trial{u}.csv")))?))?;
        outcome.task_model.save(&dir.join(format!("taskmodel_trial{u}.json")))?;
        if problem.is_synthetic() {
            write_regret(&dir.join(format!("regret_trial{u}.csv")), &problem, &outcome)?;
        }
        let values = evaluate_task_model(&outcome.task_model, &problem, &grid)?;
        let q = quantiles(&values, &ALPHAS)?;
        trials.push(json!({
            "trial": u,
            "seed": seed,
            "evaluations": outcome.trace.len(),
            "tasks": outcome.pool.len(),
            "quantiles": q,
        }));
        per_trial.push(q);
        seeds.push(seed);
    }
    let report = aggregate_trials(&per_trial, &ALPHAS, grid.len())?;
    let name = cfg.algorithm.name();
    report.write_csv(
        File::create(dir.join("quantiles.csv"))?,
        &problem.name,
        name,
        cfg.run.seed,
    )?;
    report.write_trials_csv(
        File::create(dir.join("quantiles_trials.csv"))?,
        &problem.name,
        name,
        &seeds,
    )?;
    write_json(
        &dir.join("manifest.json"),
        &json!({
            "command": "run",
            "config": cfg,
            "version": env!("CARGO_PKG_VERSION"),
            "git": git_revision(),
            "grid": { "scheme": grid.scheme, "size": grid.len(), "seed": grid.seed },
            "trials": trials,
            "started_at_unix": started_at,
            "wall_time_s": started.elapsed().as_secs_f64(),
        }),
    )?;
    Ok(ExperimentSummary {
        report,
        seeds,
        output_dir: dir.clone(),
    })
}

/// Per-trial outcome of [`run_minimax`].
#[derive(Debug, Clone)]
pub struct MinimaxTrial {
    pub seed: u64,
    pub robust_design: Vec<f64>,
    pub nominal_design: Vec<f64>,
    pub robust: RobustnessSummary,
    pub nominal: RobustnessSummary,
}

/// Robust design via minimax PMTO against the error-free optimum, per trial.
pub fn minimax_trial(
    problem: &ProblemSpec,
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<(MinimaxTrial, usize, usize, usize)> {
    let (inner_budget, outer_budget) = cfg.minimax.split()?;
    let run_cfg = RunConfig {
        seed,
        n_tot: inner_budget,
        ..cfg.run.clone()
    };
    let outer = EaConfig {
        seed: derive_seed(seed, 0xA11, 0),
        ..cfg.minimax.outer.clone()
    };
    let solved = solve_minimax(problem, &run_cfg, &outer, outer_budget)?;
    let spec = problem.truss_spec().expect("minimax problem is a truss").clone();
    let nominal_cfg = EaConfig {
        seed: derive_seed(seed, 0xA11, 1),
        ..cfg.minimax.outer.clone()
    };
    let (nominal, _, nominal_evals) = nominal_design(&spec, &nominal_cfg, cfg.minimax.total_budget)?;
    let robust = assess_robustness(&solved.design, &spec, cfg.minimax.n_errors, seed)?;
    let nominal_summary = assess_robustness(&nominal, &spec, cfg.minimax.n_errors, seed)?;
    Ok((
        MinimaxTrial {
            seed,
            robust_design: solved.design,
            nominal_design: nominal,
            robust,
            nominal: nominal_summary,
        },
        solved.inner_evaluations,
        solved.outer_evaluations,
        nominal_evals,
    ))
}

/// Runs the minimax pipeline for every trial and writes robustness tables.
pub fn run_minimax(cfg: &ExperimentConfig, force: bool) -> Result<Vec<MinimaxTrial>> {
    cfg.validate()?;
    let started = Instant::now();
    let started_at = unix_time();
    let name = match cfg.problem.as_str() {
        "truss" | "truss-minimax" => "truss-minimax",
        other => {
            return Err(PmtoError::InvalidConfig(format!(
                "problem: minimax runs on the truss, got `{other}`"
            )))
        }
    };
    let problem = ProblemSpec::by_name_with(name, &cfg.problem_overrides)?;
    let dir = &cfg.output_dir;
    prepare_output(dir, force)?;

    let mut out = Vec::with_capacity(cfg.trials);
    let mut splits = Vec::with_capacity(cfg.trials);
    let mut summary = csv::Writer::from_writer(File::create(dir.join("minimax_summary.csv"))?);
    summary.write_record([
        "trial", "seed", "design", "theta_0", "theta_1", "theta_2", "min", "mean", "max", "q95",
    ])?;
    for u in 0..cfg.trials {
        let seed = cfg.trial_seed(u);
        let (trial, inner, outer, nominal) = minimax_trial(&problem, cfg, seed)?;
        let mut w = csv::Writer::from_writer(BufWriter::new(File::create(
            dir.join(format!("robustness_trial{u}.csv")),
        )?));
        w.write_record(["design", "error_index", "error_0", "error_1", "error_2", "f"])?;
        for (label, s) in [("robust", &trial.robust), ("nominal", &trial.nominal)] {
            for (i, (e, f)) in s.errors.iter().zip(&s.values).enumerate() {
                w.write_record([
                    label.to_string(),
                    i.to_string(),
                    e[0].to_string(),
                    e[1].to_string(),
                    e[2].to_string(),
                    f.to_string(),
                ])?;
            }
        }
        w.flush()?;
        for (label, d, s) in [
            ("robust", &trial.robust_design, &trial.robust),
            ("nominal", &trial.nominal_design, &trial.nominal),
        ] {
            summary.write_record([
                u.to_string(),
                seed.to_string(),
                label.to_string(),
                d[0].to_string(),
                d[1].to_string(),
                d[2].to_string(),
                s.min.to_string(),
                s.mean.to_string(),
                s.max.to_string(),
                s.quantiles[4].to_string(),
            ])?;
        }
        splits.push(json!({
            "trial": u,
            "seed": seed,
            "inner_evaluations": inner,
            "outer_evaluations": outer,
            "nominal_evaluations": nominal,
        }));
        out.push(trial);
    }
    summary.flush()?;
    let (inner_budget, outer_budget) = cfg.minimax.split()?;
    write_json(
        &dir.join("manifest.json"),
        &json!({
            "command": "minimax",
            "config": cfg,
            "version": env!("CARGO_PKG_VERSION"),
            "git": git_revision(),
            "budget_split": { "total": cfg.minimax.total_budget, "inner": inner_budget, "outer": outer_budget },
            "trials": splits,
            "started_at_unix": started_at,
            "wall_time_s": started.elapsed().as_secs_f64(),
        }),
    )?;
    Ok(out)
}

/// Re-scores a saved task model on the configured grid.
pub fn evaluate_saved(model_path: &Path, cfg: &ExperimentConfig, force: bool) -> Result<QuantileReport> {
    let problem = cfg.problem_spec()?;
    let model = TaskModel::load(model_path)?;
    let grid = cfg.grid.build(&problem);
    let values = evaluate_task_model(&model, &problem, &grid)?;
    let report = aggregate_trials(&[quantiles(&values, &ALPHAS)?], &ALPHAS, grid.len())?;
    let dir = &cfg.output_dir;
    prepare_output(dir, force)?;
    report.write_csv(
        File::create(dir.join("quantiles.csv"))?,
        &problem.name,
        "saved",
        grid.seed,
    )?;
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(dir.join("grid_values.csv"))?));
    let mut header: Vec<String> = (0..problem.task_dim()).map(|i| format!("theta_{i}")).collect();
    header.push("f".into());
    w.write_record(&header)?;
    for (t, f) in grid.thetas.iter().zip(&values) {
        let mut rec: Vec<String> = t.iter().map(f64::to_string).collect();
        rec.push(f.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(report)
}
