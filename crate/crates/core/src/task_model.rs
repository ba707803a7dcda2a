//! The task model: one GP per solution dimension mapping task parameters to
//! elite solutions.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algorithms::EvaluatedSample;
use crate::bounds::Bounds;
use crate::error::{check_dim, PmtoError, Result};
use crate::evolution::TaskPool;
use crate::gp::{fit_hyperparams, fit_posterior, GpHyperparams, GpModel, Posterior, TrainingSet};

/// Best evaluated solution of one task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EliteRecord {
    pub theta: Vec<f64>,
    pub best_x: Vec<f64>,
    pub best_y: f64,
}

/// Epoch schedule for fitting component hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitSchedule {
    pub initial_epochs: usize,
    pub warm_epochs: usize,
    pub learning_rate: f64,
}

impl Default for FitSchedule {
    fn default() -> Self {
        Self {
            initial_epochs: 500,
            warm_epochs: 100,
            learning_rate: 0.01,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TaskModel {
    components: Vec<GpModel>,
    solution_bounds: Bounds,
    task_bounds: Bounds,
    trained_on: Vec<EliteRecord>,
}

/// On-disk form: enough to rebuild every component without refitting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskModelDocument {
    pub solution_bounds: Bounds,
    pub task_bounds: Bounds,
    pub hyperparams: Vec<GpHyperparams>,
    pub records: Vec<EliteRecord>,
}

/// One record per pool task holding its lowest objective; the earliest sample
/// wins ties.
pub fn build_elite_set(dataset: &[EvaluatedSample], pool: &TaskPool) -> Result<Vec<EliteRecord>> {
    pool.thetas
        .iter()
        .enumerate()
        .map(|(m, theta)| {
            let mut best: Option<&EvaluatedSample> = None;
            for s in dataset.iter().filter(|s| s.theta == *theta) {
                if best.is_none_or(|b| s.y < b.y) {
                    best = Some(s);
                }
            }
            let s =
                best.ok_or_else(|| PmtoError::InvalidState(format!("task {m} ({theta:?}) has no evaluated samples")))?;
            Ok(EliteRecord {
                theta: theta.clone(),
                best_x: s.x.clone(),
                best_y: s.y,
            })
        })
        .collect()
}

/// Keeps the `⌈p/100 · M⌉` records with the lowest objective, in their
/// original order.
pub fn filter_top_p(records: &[EliteRecord], p: f64) -> Result<Vec<EliteRecord>> {
    if !(p > 0.0 && p <= 100.0) {
        return Err(PmtoError::InvalidArgument(format!(
            "top-p percentage must be in (0, 100]: {p}"
        )));
    }
    if records.is_empty() {
        return Ok(Vec::new());
    }
    let keep = ((p / 100.0 * records.len() as f64) - 1e-9).ceil().max(1.0) as usize;
    let keep = keep.min(records.len());
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.sort_by(|&a, &b| records[a].best_y.total_cmp(&records[b].best_y));
    let mut kept = order[..keep].to_vec();
    kept.sort_unstable();
    Ok(kept.into_iter().map(|i| records[i].clone()).collect())
}

fn check_records(records: &[EliteRecord], solution_bounds: &Bounds, task_bounds: &Bounds) -> Result<()> {
    if records.len() < 2 {
        return Err(PmtoError::InsufficientData {
            needed: 2,
            got: records.len(),
        });
    }
    for r in records {
        check_dim(task_bounds.dim(), r.theta.len())?;
        check_dim(solution_bounds.dim(), r.best_x.len())?;
    }
    Ok(())
}

fn component_set(records: &[EliteRecord], task_bounds: &Bounds, v: usize) -> TrainingSet {
    TrainingSet {
        inputs: records.iter().map(|r| r.theta.clone()).collect(),
        targets: records.iter().map(|r| r.best_x[v]).collect(),
        input_bounds: task_bounds.clone(),
    }
}

/// Fits every component from the default initial hyperparameters.
pub fn fit_task_model(records: &[EliteRecord], solution_bounds: &Bounds, task_bounds: &Bounds) -> Result<TaskModel> {
    fit_task_model_with(records, solution_bounds, task_bounds, &FitSchedule::default(), None)
}

/// Fits every component, warm-starting from `warm` with the shorter schedule
/// when given.
pub fn fit_task_model_with(
    records: &[EliteRecord],
    solution_bounds: &Bounds,
    task_bounds: &Bounds,
    schedule: &FitSchedule,
    warm: Option<&[GpHyperparams]>,
) -> Result<TaskModel> {
    check_records(records, solution_bounds, task_bounds)?;
    let dims = solution_bounds.dim();
    if let Some(w) = warm {
        check_dim(dims, w.len())?;
    }
    let hyperparams = (0..dims)
        .into_par_iter()
        .map(|v| {
            let set = component_set(records, task_bounds, v);
            let (init, epochs) = match warm {
                Some(w) => (w[v].clone(), schedule.warm_epochs),
                None => (GpHyperparams::initial(task_bounds.dim()), schedule.initial_epochs),
            };
            fit_hyperparams(&set, &init, epochs, schedule.learning_rate)
        })
        .collect::<Result<Vec<_>>>()?;
    task_model_from_hyperparams(records, solution_bounds, task_bounds, hyperparams)
}

/// Conditions each component on `records` under fixed hyperparameters.
pub fn task_model_from_hyperparams(
    records: &[EliteRecord],
    solution_bounds: &Bounds,
    task_bounds: &Bounds,
    hyperparams: Vec<GpHyperparams>,
) -> Result<TaskModel> {
    check_records(records, solution_bounds, task_bounds)?;
    check_dim(solution_bounds.dim(), hyperparams.len())?;
    let components = hyperparams
        .iter()
        .enumerate()
        .map(|(v, h)| fit_posterior(&component_set(records, task_bounds, v), h))
        .collect::<Result<Vec<_>>>()?;
    Ok(TaskModel {
        components,
        solution_bounds: solution_bounds.clone(),
        task_bounds: task_bounds.clone(),
        trained_on: records.to_vec(),
    })
}

impl TaskModel {
    pub fn components(&self) -> &[GpModel] {
        &self.components
    }

    pub fn solution_bounds(&self) -> &Bounds {
        &self.solution_bounds
    }

    pub fn task_bounds(&self) -> &Bounds {
        &self.task_bounds
    }

    pub fn trained_on(&self) -> &[EliteRecord] {
        &self.trained_on
    }

    pub fn hyperparams(&self) -> Vec<GpHyperparams> {
        self.components.iter().map(|c| c.hyperparams().clone()).collect()
    }

    /// Posterior means per solution dimension, clamped to the solution box.
    pub fn predict_solution(&self, theta: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.task_bounds.dim(), theta.len())?;
        let mut x = self
            .components
            .iter()
            .map(|c| c.predict(theta).map(|p| p.mean))
            .collect::<Result<Vec<_>>>()?;
        self.solution_bounds.clamp(&mut x);
        Ok(x)
    }

    /// Unclamped per-dimension posteriors.
    pub fn predict_posteriors(&self, theta: &[f64]) -> Result<Vec<Posterior>> {
        check_dim(self.task_bounds.dim(), theta.len())?;
        self.components.iter().map(|c| c.predict(theta)).collect()
    }

    pub fn to_document(&self) -> TaskModelDocument {
        TaskModelDocument {
            solution_bounds: self.solution_bounds.clone(),
            task_bounds: self.task_bounds.clone(),
            hyperparams: self.hyperparams(),
            records: self.trained_on.clone(),
        }
    }

    pub fn from_document(doc: &TaskModelDocument) -> Result<Self> {
        task_model_from_hyperparams(
            &doc.records,
            &doc.solution_bounds,
            &doc.task_bounds,
            doc.hyperparams.clone(),
        )
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_document())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_document(&serde_json::from_str(text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
