//! Three-joint planar arm reaching for a fixed target.
//!
//! Controls `x ∈ [0,1]^3` map to joint angles `α_i = α_max (2 x_i − 1)`; joint
//! angles accumulate along the chain, every link has length `L`, the base sits
//! at the origin and the score is the end-effector distance to `(0.5, 0.5)`.

use std::f64::consts::PI;

use crate::bounds::Bounds;
use crate::error::{check_dim, Result};

pub const JOINTS: usize = 3;
pub const TARGET: [f64; 2] = [0.5, 0.5];

/// `L ∈ [0.5/n, 1/n]`, `α_max ∈ [0.5π/n, π/n]` with `n = 3`.
pub fn task_bounds() -> Bounds {
    let n = JOINTS as f64;
    Bounds {
        lower: vec![0.5 / n, 0.5 * PI / n],
        upper: vec![1.0 / n, PI / n],
    }
}

pub fn end_effector(x: &[f64], link: f64, alpha_max: f64) -> [f64; 2] {
    let mut angle = 0.0;
    let mut p = [0.0, 0.0];
    for xi in x {
        angle += alpha_max * (2.0 * xi - 1.0);
        p[0] += link * angle.cos();
        p[1] += link * angle.sin();
    }
    p
}

pub fn robot_arm_evaluate(x: &[f64], theta: &[f64]) -> Result<f64> {
    check_dim(JOINTS, x.len())?;
    check_dim(2, theta.len())?;
    let p = end_effector(x, theta[0], theta[1]);
    Ok(((p[0] - TARGET[0]).powi(2) + (p[1] - TARGET[1]).powi(2)).sqrt())
}
