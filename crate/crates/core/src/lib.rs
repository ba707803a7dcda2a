//! Parametric multi-task optimization.
//!
//! Joint search over a solution box `X` and a continuous task box `Θ`:
//! a Gaussian process over concatenated `(x, θ)` inputs transfers knowledge
//! across tasks, a task model `Θ → X` predicts optimized solutions for unseen
//! tasks, and a determinant-driven evolutionary search places new tasks where
//! the task model is least represented.
//!
//! Module map:
//!
//! * [`gp`] exact GP regression, hyperparameter fitting, information gain
//! * [`acquisition`] UCB scoring and its maximization over the solution box
//! * [`task_model`] per-dimension GPs mapping tasks to elite solutions
//! * [`evolution`] SBX/PM operators and the diversity-driven task search
//! * [`algorithms`] single-task baseline, fixed-task and task-evolving loops
//! * [`problems`] synthetic suite, robot arm, crane load and truss design
//! * [`evaluation`] quantile protocol, minimax pipeline, robustness checks
//! * [`experiment`] config-driven trial orchestration and file output

pub mod acquisition;
pub mod algorithms;
pub mod bounds;
pub mod error;
pub mod evaluation;
pub mod evolution;
pub mod experiment;
pub mod gp;
pub mod problems;
pub mod sampling;
pub mod task_model;

pub use bounds::Bounds;
pub use error::{PmtoError, Result};
