//! Benchmark problems behind one `(x, θ) → f` interface.
//!
//! Every problem is registered by name; its constants serialize to JSON so a
//! config file can override any of them before the bounds are derived.

pub mod crane;
pub mod robot;
pub mod synthetic;
pub mod truss;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::bounds::Bounds;
use crate::error::{check_dim, PmtoError, Result};

pub use crane::{crane_evaluate, CraneConditionRanges, CraneParams, CraneVariant};
pub use robot::robot_arm_evaluate;
pub use synthetic::{synthetic_evaluate, BaseFunction, SyntheticSpec, TaskMap};
pub use truss::{truss_evaluate, truss_evaluate_clamped, TrussSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Objective {
    Synthetic(SyntheticSpec),
    RobotArm,
    Crane {
        variant: CraneVariant,
        params: CraneParams,
        ranges: CraneConditionRanges,
    },
    /// Errors as solutions, designs as tasks; the score is minimized.
    Truss {
        spec: TrussSpec,
    },
    /// As `Truss` with the score negated, so minimizing finds the worst error.
    TrussMinimax {
        spec: TrussSpec,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub name: String,
    pub objective: Objective,
    pub solution_bounds: Bounds,
    pub task_bounds: Bounds,
}

/// Registered problem names with one-line descriptions.
pub const REGISTRY: &[(&str, &str)] = &[
    ("sphere-1", "shifted Sphere, low-frequency task map"),
    ("sphere-2", "shifted Sphere, high-frequency task map"),
    ("ackley-1", "shifted Ackley, low-frequency task map"),
    ("ackley-2", "shifted Ackley, high-frequency task map"),
    ("rastrigin-1", "shifted Rastrigin, low-frequency task map"),
    ("rastrigin-2", "shifted Rastrigin, high-frequency task map"),
    ("griewank-1", "shifted Griewank, low-frequency task map"),
    ("griewank-2", "shifted Griewank, high-frequency task map"),
    ("robot-arm", "three-joint planar arm, tasks = (link length, max angle)"),
    ("crane-1", "crane load switching times, tasks = switching delays"),
    (
        "crane-2",
        "crane load switching times, tasks = (rope length, load mass, resistance coefficient)",
    ),
    ("truss", "two-bar truss, solutions = processing errors, tasks = designs"),
    (
        "truss-minimax",
        "negated truss: minimizing finds the worst-case processing error",
    ),
];

pub fn list_problems() -> Vec<&'static str> {
    REGISTRY.iter().map(|(n, _)| *n).collect()
}

fn objective_by_name(name: &str) -> Result<Objective> {
    let synth = |base, sigma| Ok(Objective::Synthetic(SyntheticSpec::new(base, sigma)));
    let crane = |variant| {
        Ok(Objective::Crane {
            variant,
            params: CraneParams::nominal(),
            ranges: CraneConditionRanges::default(),
        })
    };
    match name {
        "sphere-1" => synth(BaseFunction::Sphere, TaskMap::Sigma1),
        "sphere-2" => synth(BaseFunction::Sphere, TaskMap::Sigma2),
        "ackley-1" => synth(BaseFunction::Ackley, TaskMap::Sigma1),
        "ackley-2" => synth(BaseFunction::Ackley, TaskMap::Sigma2),
        "rastrigin-1" => synth(BaseFunction::Rastrigin, TaskMap::Sigma1),
        "rastrigin-2" => synth(BaseFunction::Rastrigin, TaskMap::Sigma2),
        "griewank-1" => synth(BaseFunction::Griewank, TaskMap::Sigma1),
        "griewank-2" => synth(BaseFunction::Griewank, TaskMap::Sigma2),
        "robot-arm" => Ok(Objective::RobotArm),
        "crane-1" => crane(CraneVariant::Delays),
        "crane-2" => crane(CraneVariant::Conditions),
        "truss" => Ok(Objective::Truss {
            spec: TrussSpec::default(),
        }),
        "truss-minimax" => Ok(Objective::TrussMinimax {
            spec: TrussSpec::default(),
        }),
        other => Err(PmtoError::InvalidConfig(format!(
            "problem: unknown name `{other}` (known: {})",
            list_problems().join(", ")
        ))),
    }
}

/// Recursively merges `patch` into `base`; keys absent from `base` are rejected.
fn merge(base: &mut Value, patch: &Value, path: &str) -> Result<()> {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                let key = if path.is_empty() {
                    k.clone()
                } else {
                    format!("{path}.{k}")
                };
                let slot = b
                    .get_mut(k)
                    .ok_or_else(|| PmtoError::InvalidConfig(format!("problem override: unknown key `{key}`")))?;
                merge(slot, v, &key)?;
            }
            Ok(())
        }
        (b, p) => {
            *b = p.clone();
            Ok(())
        }
    }
}

impl ProblemSpec {
    pub fn from_objective(name: impl Into<String>, objective: Objective) -> Result<Self> {
        let (solution_bounds, task_bounds) = match &objective {
            Objective::Synthetic(s) => {
                if s.l_matrix.iter().any(|r| r.len() != s.task_dim()) || s.solution_dim() == 0 {
                    return Err(PmtoError::InvalidConfig(
                        "problem: synthetic mixing matrix must be a non-empty rectangle".into(),
                    ));
                }
                (Bounds::unit(s.solution_dim()), Bounds::unit(s.task_dim()))
            }
            Objective::RobotArm => (Bounds::unit(robot::JOINTS), robot::task_bounds()),
            Objective::Crane {
                variant,
                params,
                ranges,
            } => {
                params.validate()?;
                (crane::solution_bounds(*variant), crane::task_bounds(*variant, ranges))
            }
            Objective::Truss { spec } | Objective::TrussMinimax { spec } => (spec.error_bounds(), spec.design_bounds()),
        };
        let solution_bounds = Bounds::new(solution_bounds.lower, solution_bounds.upper)?;
        let task_bounds = Bounds::new(task_bounds.lower, task_bounds.upper)?;
        Ok(Self {
            name: name.into(),
            objective,
            solution_bounds,
            task_bounds,
        })
    }

    pub fn by_name(name: &str) -> Result<Self> {
        Self::from_objective(name, objective_by_name(name)?)
    }

    /// Looks up `name` and applies a JSON object of constant overrides.
    pub fn by_name_with(name: &str, overrides: &Value) -> Result<Self> {
        let objective = objective_by_name(name)?;
        if overrides.as_object().is_some_and(|o| o.is_empty()) || overrides.is_null() {
            return Self::from_objective(name, objective);
        }
        let mut doc = serde_json::to_value(&objective)?;
        merge(&mut doc, overrides, "")?;
        let objective: Objective =
            serde_json::from_value(doc).map_err(|e| PmtoError::InvalidConfig(format!("problem override: {e}")))?;
        Self::from_objective(name, objective)
    }

    pub fn solution_dim(&self) -> usize {
        self.solution_bounds.dim()
    }

    pub fn task_dim(&self) -> usize {
        self.task_bounds.dim()
    }

    pub fn is_synthetic(&self) -> bool {
        matches!(self.objective, Objective::Synthetic(_))
    }

    pub fn evaluate(&self, x: &[f64], theta: &[f64]) -> Result<f64> {
        check_dim(self.solution_dim(), x.len())?;
        check_dim(self.task_dim(), theta.len())?;
        match &self.objective {
            Objective::Synthetic(s) => synthetic_evaluate(s, x, theta),
            Objective::RobotArm => robot_arm_evaluate(x, theta),
            Objective::Crane { variant, params, .. } => crane_evaluate(x, theta, *variant, params),
            Objective::Truss { spec } => truss_evaluate_clamped(spec, x, theta),
            Objective::TrussMinimax { spec } => truss_evaluate_clamped(spec, x, theta).map(|f| -f),
        }
    }

    /// The optimum `(σ(Lθ), 0)` of a synthetic problem.
    pub fn known_optimum(&self, theta: &[f64]) -> Result<(Vec<f64>, f64)> {
        match &self.objective {
            Objective::Synthetic(s) => Ok((s.shift(theta)?, 0.0)),
            _ => Err(PmtoError::Unsupported(format!(
                "problem `{}` has no closed-form optimum",
                self.name
            ))),
        }
    }

    /// The truss constants behind a truss or truss-minimax problem.
    pub fn truss_spec(&self) -> Option<&TrussSpec> {
        match &self.objective {
            Objective::Truss { spec } | Objective::TrussMinimax { spec } => Some(spec),
            _ => None,
        }
    }
}
