//! Two-bar truss design under processing errors.
//!
//! Design `θ = (θ1, θ2, θ3)` holds the two cross-section areas and the height.
//! A processing error `x` is a fraction of each design range, so the built
//! structure operates at `p = θ + x ⊙ (θ_max − θ_min)`. The score aggregates
//! volume `f1` and member stress `f2` with fixed weights.

use serde::{Deserialize, Serialize};

use crate::bounds::Bounds;
use crate::error::{check_dim, PmtoError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrussSpec {
    /// Weight on volume.
    pub volume_weight: f64,
    /// Weight on stress.
    pub stress_weight: f64,
    pub design_lower: [f64; 3],
    pub design_upper: [f64; 3],
    /// Half-width of the fractional error box.
    pub error_fraction: f64,
}

impl Default for TrussSpec {
    fn default() -> Self {
        Self {
            volume_weight: 10.0,
            stress_weight: 1e-5,
            design_lower: [2.0, 2.0, 1.0],
            design_upper: [100.0, 100.0, 3.0],
            error_fraction: 0.05,
        }
    }
}

/// Smallest operating area and height used by the clamped variant.
pub const OPERATING_FLOOR: f64 = 1e-6;

impl TrussSpec {
    pub fn design_bounds(&self) -> Bounds {
        Bounds {
            lower: self.design_lower.to_vec(),
            upper: self.design_upper.to_vec(),
        }
    }

    pub fn error_bounds(&self) -> Bounds {
        Bounds::uniform(3, -self.error_fraction, self.error_fraction)
    }

    /// Operating parameters `θ + x ⊙ range`.
    pub fn operating(&self, x: &[f64], theta: &[f64]) -> Result<[f64; 3]> {
        check_dim(3, x.len())?;
        check_dim(3, theta.len())?;
        let mut p = [0.0; 3];
        for i in 0..3 {
            p[i] = theta[i] + x[i] * (self.design_upper[i] - self.design_lower[i]);
        }
        Ok(p)
    }

    /// Weighted volume and stress at operating parameters `p`.
    pub fn score(&self, p: &[f64; 3]) -> Result<f64> {
        if p[0] * p[2] <= 0.0 {
            return Err(PmtoError::InvalidArgument(format!(
                "truss operating area times height must be positive: p = {p:?}"
            )));
        }
        let diag = (16.0 + p[2] * p[2]).sqrt();
        let volume = p[0] * diag + p[1] * (1.0 + p[2] * p[2]).sqrt();
        let stress = 20.0 * diag / (p[0] * p[2]);
        Ok(self.volume_weight * volume + self.stress_weight * stress)
    }
}

/// Objective with error fractions `x` applied to design `θ`.
pub fn truss_evaluate(spec: &TrussSpec, x: &[f64], theta: &[f64]) -> Result<f64> {
    let p = spec.operating(x, theta)?;
    spec.score(&p)
}

/// As [`truss_evaluate`], with the operating area `p1` and height `p3` floored
/// at [`OPERATING_FLOOR`] so the whole design × error box stays finite.
pub fn truss_evaluate_clamped(spec: &TrussSpec, x: &[f64], theta: &[f64]) -> Result<f64> {
    let mut p = spec.operating(x, theta)?;
    p[0] = p[0].max(OPERATING_FLOOR);
    p[2] = p[2].max(OPERATING_FLOOR);
    spec.score(&p)
}
