//! Shifted canonical functions `f(x, θ) = g(λ (x − σ(Lθ)))` on `[0,1]^4 × [0,1]^5`.

use std::f64::consts::{E, PI};

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Result};

pub const SOLUTION_DIM: usize = 4;
pub const TASK_DIM: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaseFunction {
    Sphere,
    Ackley,
    Rastrigin,
    Griewank,
}

impl BaseFunction {
    pub fn eval(self, z: &[f64]) -> f64 {
        let n = z.len() as f64;
        match self {
            BaseFunction::Sphere => z.iter().map(|v| v * v).sum(),
            BaseFunction::Ackley => {
                let sq = z.iter().map(|v| v * v).sum::<f64>() / n;
                let cs = z.iter().map(|v| (2.0 * PI * v).cos()).sum::<f64>() / n;
                20.0 + E - 20.0 * (-0.2 * sq.sqrt()).exp() - cs.exp()
            }
            BaseFunction::Rastrigin => z.iter().map(|v| v * v - 10.0 * (2.0 * PI * v).cos() + 10.0).sum(),
            BaseFunction::Griewank => {
                let s = z.iter().map(|v| v * v).sum::<f64>() / 4000.0;
                let p: f64 = z
                    .iter()
                    .enumerate()
                    .map(|(i, v)| (v / ((i + 1) as f64).sqrt()).cos())
                    .product();
                s - p + 1.0
            }
        }
    }

    /// Scale factor used by the suite for this base function.
    pub fn default_lambda(self) -> f64 {
        match self {
            BaseFunction::Sphere | BaseFunction::Ackley => 4.0,
            BaseFunction::Rastrigin => 20.0,
            BaseFunction::Griewank => 600.0,
        }
    }
}

/// Nonlinear maps of the linearly transformed task parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskMap {
    /// `(sin(5(v + 0.5)) + 1) / 2`, the low-frequency map.
    Sigma1,
    /// `0.3 (1 + sin(5πv − π/2)) + 0.3 (v − 0.2)²`, the high-frequency map.
    Sigma2,
}

impl TaskMap {
    pub fn apply(self, v: f64) -> f64 {
        match self {
            TaskMap::Sigma1 => ((5.0 * (v + 0.5)).sin() + 1.0) / 2.0,
            TaskMap::Sigma2 => 0.3 * (1.0 + (5.0 * PI * v - PI / 2.0).sin()) + 0.3 * (v - 0.2).powi(2),
        }
    }
}

/// The 4×5 task-to-solution mixing matrix of the suite.
pub fn default_l_matrix() -> Vec<Vec<f64>> {
    vec![
        vec![1.0, 0.0, 0.0, 0.0, 0.0],
        vec![0.0, 2.0 / 3.0, 1.0 / 3.0, 0.0, 0.0],
        vec![0.0, 0.0, 1.0 / 3.0, 2.0 / 3.0, 0.0],
        vec![0.0, 0.0, 0.0, 0.0, 1.0],
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub base: BaseFunction,
    pub lambda: f64,
    pub l_matrix: Vec<Vec<f64>>,
    pub sigma: TaskMap,
}

impl SyntheticSpec {
    pub fn new(base: BaseFunction, sigma: TaskMap) -> Self {
        Self {
            base,
            lambda: base.default_lambda(),
            l_matrix: default_l_matrix(),
            sigma,
        }
    }

    pub fn solution_dim(&self) -> usize {
        self.l_matrix.len()
    }

    pub fn task_dim(&self) -> usize {
        self.l_matrix.first().map_or(0, Vec::len)
    }

    /// The optimum location `σ(Lθ)`.
    pub fn shift(&self, theta: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.task_dim(), theta.len())?;
        Ok(self
            .l_matrix
            .iter()
            .map(|row| self.sigma.apply(row.iter().zip(theta).map(|(a, t)| a * t).sum()))
            .collect())
    }
}

pub fn synthetic_evaluate(spec: &SyntheticSpec, x: &[f64], theta: &[f64]) -> Result<f64> {
    check_dim(spec.solution_dim(), x.len())?;
    let shift = spec.shift(theta)?;
    let z: Vec<f64> = x.iter().zip(&shift).map(|(xi, si)| spec.lambda * (xi - si)).collect();
    Ok(spec.base.eval(&z))
}
