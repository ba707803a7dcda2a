//! Exact Gaussian-process regression with ARD squared-exponential kernels.
//!
//! Inputs are mapped affinely to the unit cube using known box bounds and
//! targets are standardized per fit; hyperparameters live in those normalized
//! units. The same machinery serves plain solution inputs, concatenated
//! `(x, θ)` inputs of the unified model, and task inputs of the task model.
//! An ARD kernel over a concatenation is exactly the product of the per-block
//! kernels, so the unified kernel at equal task parameters reduces to the
//! solution-only kernel.

mod fit;
mod info_gain;
mod kernel;
mod model;

pub use fit::{fit_hyperparams, fit_hyperparams_with, FitOptions};
pub use info_gain::{conditional_information_gain, independent_information_gain};
pub use kernel::{rbf_kernel, GpHyperparams};
pub use model::{fit_posterior, GpModel, Normalization, Posterior, TrainingSet};

/// Initial diagonal jitter, relative to the signal variance.
pub const JITTER_START: f64 = 1e-6;
/// Largest diagonal jitter tried before giving up, relative to the signal variance.
pub const JITTER_MAX: f64 = 1e-2;
/// Floor for the target standard deviation used in standardization.
pub const TARGET_STD_FLOOR: f64 = 1e-8;
/// Floor for the fitted noise variance.
pub const NOISE_FLOOR: f64 = 1e-8;
/// Posterior variances down to this value are clamped to zero; below it is an error.
pub const VARIANCE_TOLERANCE: f64 = 1e-9;
