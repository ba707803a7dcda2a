//! Real-coded evolutionary search and the determinant-driven task selection.
//!
//! The diversity of a candidate task `θ` against the pool `Ψ` is
//!
//! ```text
//! g(θ) = Σ_v det Q_v,   Q_v = [κ_v(a, b)]_{a,b ∈ Ψ ∪ {θ}} + 1e-8 I
//! ```
//!
//! summed over the noiseless kernels of the task-model components. It peaks
//! where the new task is least correlated with the pool under every kernel.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::Bounds;
use crate::error::{check_dim, PmtoError, Result};
use crate::gp::GpHyperparams;
use crate::sampling::uniform_point;
use crate::task_model::TaskModel;

/// Diagonal jitter added to every diversity kernel matrix.
pub const DIVERSITY_JITTER: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EaConfig {
    pub population_size: usize,
    pub generations: usize,
    pub eta_c: f64,
    pub eta_m: f64,
    pub p_c: f64,
    pub p_m: f64,
    pub seed: u64,
}

impl Default for EaConfig {
    fn default() -> Self {
        Self {
            population_size: 100,
            generations: 50,
            eta_c: 15.0,
            eta_m: 20.0,
            p_c: 0.9,
            p_m: 0.9,
            seed: 0,
        }
    }
}

impl EaConfig {
    pub fn validate(&self) -> Result<()> {
        let prob = |p: f64| (0.0..=1.0).contains(&p);
        if self.population_size < 2 {
            return Err(PmtoError::InvalidConfig("ea.population_size must be at least 2".into()));
        }
        if self.generations < 1 {
            return Err(PmtoError::InvalidConfig("ea.generations must be at least 1".into()));
        }
        if !(prob(self.p_c) && prob(self.p_m)) {
            return Err(PmtoError::InvalidConfig(format!(
                "ea.p_c and ea.p_m must be probabilities: {} {}",
                self.p_c, self.p_m
            )));
        }
        if !(self.eta_c > 0.0 && self.eta_m > 0.0) {
            return Err(PmtoError::InvalidConfig(format!(
                "ea.eta_c and ea.eta_m must be positive: {} {}",
                self.eta_c, self.eta_m
            )));
        }
        Ok(())
    }
}

/// The pool of task parameters solved so far.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TaskPool {
    pub thetas: Vec<Vec<f64>>,
}

impl TaskPool {
    pub fn new(thetas: Vec<Vec<f64>>) -> Self {
        Self { thetas }
    }

    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }

    pub fn push(&mut self, theta: Vec<f64>) {
        self.thetas.push(theta);
    }

    pub fn position(&self, theta: &[f64]) -> Option<usize> {
        self.thetas.iter().position(|t| t == theta)
    }
}

/// Determinant by Cholesky when positive definite, otherwise by LU.
pub fn determinant(m: &DMatrix<f64>) -> f64 {
    match m.clone().cholesky() {
        Some(c) => c.l_dirty().diagonal().iter().map(|d| d * d).product(),
        None => m.clone().lu().determinant(),
    }
}

/// Kernel matrices of the pool under every component, reused across candidates.
pub struct DiversityEvaluator {
    kernels: Vec<GpHyperparams>,
    task_bounds: Bounds,
    unit_pool: Vec<Vec<f64>>,
    pool_blocks: Vec<DMatrix<f64>>,
}

impl DiversityEvaluator {
    pub fn new(pool: &TaskPool, model: &TaskModel) -> Result<Self> {
        let task_bounds = model.task_bounds().clone();
        for t in &pool.thetas {
            check_dim(task_bounds.dim(), t.len())?;
        }
        let kernels = model.hyperparams();
        let unit_pool: Vec<Vec<f64>> = pool.thetas.iter().map(|t| task_bounds.to_unit(t)).collect();
        let m = unit_pool.len();
        let pool_blocks = kernels
            .iter()
            .map(|h| {
                DMatrix::from_fn(m + 1, m + 1, |i, j| {
                    if i < m && j < m {
                        h.eval(&unit_pool[i], &unit_pool[j]) + if i == j { DIVERSITY_JITTER } else { 0.0 }
                    } else {
                        0.0
                    }
                })
            })
            .collect();
        Ok(Self {
            kernels,
            task_bounds,
            unit_pool,
            pool_blocks,
        })
    }

    pub fn evaluate(&self, theta: &[f64]) -> Result<f64> {
        check_dim(self.task_bounds.dim(), theta.len())?;
        let u = self.task_bounds.to_unit(theta);
        let m = self.unit_pool.len();
        let mut total = 0.0;
        for (h, block) in self.kernels.iter().zip(&self.pool_blocks) {
            let mut q = block.clone();
            for (i, p) in self.unit_pool.iter().enumerate() {
                let k = h.eval(p, &u);
                q[(i, m)] = k;
                q[(m, i)] = k;
            }
            q[(m, m)] = h.eval(&u, &u) + DIVERSITY_JITTER;
            total += determinant(&q);
        }
        Ok(total)
    }
}

/// `Σ_v det Q_v` for `pool ∪ {theta}` under the task-model kernels.
pub fn diversity_objective(theta: &[f64], pool: &TaskPool, model: &TaskModel) -> Result<f64> {
    DiversityEvaluator::new(pool, model)?.evaluate(theta)
}

fn sbx_spread(beta: f64, eta: f64, u: f64) -> f64 {
    let alpha = 2.0 - beta.powf(-(eta + 1.0));
    if u <= 1.0 / alpha {
        (u * alpha).powf(1.0 / (eta + 1.0))
    } else {
        (1.0 / (2.0 - u * alpha)).powf(1.0 / (eta + 1.0))
    }
}

/// Bounded simulated binary crossover.
///
/// With probability `p_c` the pair crosses; each variable then recombines with
/// probability 0.5 and its two children swap places with probability 0.5.
pub fn sbx_crossover<R: Rng + ?Sized>(
    parent_a: &[f64],
    parent_b: &[f64],
    bounds: &Bounds,
    eta_c: f64,
    p_c: f64,
    rng: &mut R,
) -> (Vec<f64>, Vec<f64>) {
    let mut a = parent_a.to_vec();
    let mut b = parent_b.to_vec();
    if rng.gen::<f64>() >= p_c {
        return (a, b);
    }
    for i in 0..a.len() {
        if rng.gen::<f64>() > 0.5 {
            continue;
        }
        let (y1, y2) = if a[i] <= b[i] { (a[i], b[i]) } else { (b[i], a[i]) };
        if (y2 - y1).abs() <= 1e-14 {
            continue;
        }
        let (lo, hi) = (bounds.lower[i], bounds.upper[i]);
        let u: f64 = rng.gen();
        let bq1 = sbx_spread(1.0 + 2.0 * (y1 - lo) / (y2 - y1), eta_c, u);
        let bq2 = sbx_spread(1.0 + 2.0 * (hi - y2) / (y2 - y1), eta_c, u);
        let c1 = (0.5 * ((y1 + y2) - bq1 * (y2 - y1))).clamp(lo, hi);
        let c2 = (0.5 * ((y1 + y2) + bq2 * (y2 - y1))).clamp(lo, hi);
        if rng.gen::<f64>() <= 0.5 {
            a[i] = c2;
            b[i] = c1;
        } else {
            a[i] = c1;
            b[i] = c2;
        }
    }
    (a, b)
}

/// Bounded polynomial mutation, applied to each variable with probability `p_m`.
pub fn polynomial_mutation<R: Rng + ?Sized>(
    individual: &[f64],
    bounds: &Bounds,
    eta_m: f64,
    p_m: f64,
    rng: &mut R,
) -> Vec<f64> {
    let mut y = individual.to_vec();
    let pow = 1.0 / (eta_m + 1.0);
    for ((yi, &lo), &hi) in y.iter_mut().zip(&bounds.lower).zip(&bounds.upper) {
        if rng.gen::<f64>() >= p_m {
            continue;
        }
        let width = hi - lo;
        if width <= 0.0 {
            continue;
        }
        let d1 = (*yi - lo) / width;
        let d2 = (hi - *yi) / width;
        let u: f64 = rng.gen();
        let dq = if u < 0.5 {
            let v = 2.0 * u + (1.0 - 2.0 * u) * (1.0 - d1).powf(eta_m + 1.0);
            v.powf(pow) - 1.0
        } else {
            let v = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * (1.0 - d2).powf(eta_m + 1.0);
            1.0 - v.powf(pow)
        };
        *yi = (*yi + dq * width).clamp(lo, hi);
    }
    y
}

/// Result of an evolutionary maximization.
#[derive(Debug, Clone, PartialEq)]
pub struct EaOutcome {
    pub best: Vec<f64>,
    pub best_fitness: f64,
    /// Best fitness after initialization and after every generation.
    pub trace: Vec<f64>,
    /// Number of fitness evaluations performed.
    pub evaluations: usize,
}

fn rank_key(f: f64) -> f64 {
    if f.is_nan() {
        f64::NEG_INFINITY
    } else {
        f
    }
}

fn tournament<R: Rng + ?Sized>(fitness: &[f64], rng: &mut R) -> usize {
    let a = rng.gen_range(0..fitness.len());
    let b = rng.gen_range(0..fitness.len());
    if rank_key(fitness[b]) > rank_key(fitness[a]) {
        b
    } else {
        a
    }
}

/// Maximizes `fitness` with binary tournaments, SBX, polynomial mutation and
/// `(μ+λ)` truncation, starting from `initial` (whose size sets the population).
///
/// Fitness values of a population are computed in parallel and collected in
/// order, so the outcome depends only on `rng`.
pub fn evolve<F, R>(
    initial: Vec<Vec<f64>>,
    bounds: &Bounds,
    cfg: &EaConfig,
    generations: usize,
    fitness: F,
    rng: &mut R,
) -> Result<EaOutcome>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
    R: Rng + ?Sized,
{
    let size = initial.len();
    if size < 2 {
        return Err(PmtoError::InvalidConfig(
            "population must hold at least 2 individuals".into(),
        ));
    }
    for ind in &initial {
        check_dim(bounds.dim(), ind.len())?;
    }
    let score = |pop: &[Vec<f64>]| -> Result<Vec<f64>> { pop.par_iter().map(|x| fitness(x)).collect() };

    let mut pop = initial;
    let mut fit = score(&pop)?;
    let mut evaluations = size;
    let best_of = |fit: &[f64]| {
        let mut b = 0;
        for i in 1..fit.len() {
            if rank_key(fit[i]) > rank_key(fit[b]) {
                b = i;
            }
        }
        b
    };
    let mut trace = vec![rank_key(fit[best_of(&fit)])];

    for _ in 0..generations {
        let mut offspring = Vec::with_capacity(size + 1);
        while offspring.len() < size {
            let pa = tournament(&fit, rng);
            let pb = tournament(&fit, rng);
            let (ca, cb) = sbx_crossover(&pop[pa], &pop[pb], bounds, cfg.eta_c, cfg.p_c, rng);
            offspring.push(polynomial_mutation(&ca, bounds, cfg.eta_m, cfg.p_m, rng));
            offspring.push(polynomial_mutation(&cb, bounds, cfg.eta_m, cfg.p_m, rng));
        }
        offspring.truncate(size);
        let off_fit = score(&offspring)?;
        evaluations += size;

        pop.extend(offspring);
        fit.extend(off_fit);
        let mut order: Vec<usize> = (0..pop.len()).collect();
        order.sort_by(|&a, &b| rank_key(fit[b]).total_cmp(&rank_key(fit[a])));
        order.truncate(size);
        pop = order.iter().map(|&i| pop[i].clone()).collect();
        fit = order.iter().map(|&i| fit[i]).collect();
        trace.push(rank_key(fit[0]));
    }
    let b = best_of(&fit);
    Ok(EaOutcome {
        best: pop[b].clone(),
        best_fitness: fit[b],
        trace,
        evaluations,
    })
}

/// Evolves a new task maximizing [`diversity_objective`] from a uniform random
/// population; deterministic in `cfg.seed`.
pub fn evolve_task(pool: &TaskPool, model: &TaskModel, theta_bounds: &Bounds, cfg: &EaConfig) -> Result<Vec<f64>> {
    Ok(evolve_task_traced(pool, model, theta_bounds, cfg)?.best)
}

pub fn evolve_task_traced(
    pool: &TaskPool,
    model: &TaskModel,
    theta_bounds: &Bounds,
    cfg: &EaConfig,
) -> Result<EaOutcome> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let initial = (0..cfg.population_size)
        .map(|_| uniform_point(theta_bounds, &mut rng))
        .collect();
    evolve_task_from(pool, model, theta_bounds, cfg, initial, &mut rng)
}

/// As [`evolve_task_traced`] with a caller-supplied initial population.
pub fn evolve_task_from<R: Rng + ?Sized>(
    pool: &TaskPool,
    model: &TaskModel,
    theta_bounds: &Bounds,
    cfg: &EaConfig,
    initial: Vec<Vec<f64>>,
    rng: &mut R,
) -> Result<EaOutcome> {
    cfg.validate()?;
    check_dim(model.task_bounds().dim(), theta_bounds.dim())?;
    let eval = DiversityEvaluator::new(pool, model)?;
    evolve(initial, theta_bounds, cfg, cfg.generations, |t| eval.evaluate(t), rng)
}
