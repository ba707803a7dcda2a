//! Crane-load drive switching.
//!
//! A crane of mass `m1` carries a load `m2` on a rope of length `l`. The drive
//! force alternates `F_max` for `t1`, `F_min` for `t2`, `F_max` for `t3`; the
//! score trades the specific residual oscillation energy against the
//! acceleration time:
//!
//! ```text
//! f = 2E / (m2 v²) + (t1 + t2 + t3) Ω / 2π,   E = w·TE if TE ≥ Δ else 0
//! ```
//!
//! Variant I perturbs the switching times by task-given delays `Δt`; variant II
//! varies rope length, load mass and the resistance coefficient.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::bounds::Bounds;
use crate::error::{check_dim, PmtoError, Result};

pub const GRAVITY: f64 = 9.81;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CraneVariant {
    /// Task parameters are switching delays `(Δt1, Δt2, Δt3)`.
    #[serde(rename = "I")]
    Delays,
    /// Task parameters are `(l, m2, c_W)` with resistance `W = c_W · g · (m1 + m2)`.
    #[serde(rename = "II")]
    Conditions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CraneParams {
    pub m1: f64,
    pub m2: f64,
    /// Target velocity.
    pub v: f64,
    /// Suspension length.
    pub l: f64,
    /// Resistance force `W`.
    pub resistance: f64,
    /// Penalty weight `w` on terminal energy.
    pub penalty_weight: f64,
    /// Energy threshold `Δ` below which oscillation is free.
    pub energy_threshold: f64,
    pub f_min: f64,
    pub f_max: f64,
    pub g: f64,
}

impl CraneParams {
    /// Nominal constants of the delay variant.
    pub fn nominal() -> Self {
        let (m1, m2) = (4.2e4, 1.0e4);
        Self {
            m1,
            m2,
            v: 0.7,
            l: 6.5,
            resistance: 0.01 * GRAVITY * (m1 + m2),
            penalty_weight: 1.0e6,
            energy_threshold: 0.01,
            f_min: 0.0,
            f_max: 2.41e4,
            g: GRAVITY,
        }
    }

    /// `Ω = √(g (m1 + m2) / (m1 l))`.
    pub fn omega(&self) -> f64 {
        (self.g * (self.m1 + self.m2) / (self.m1 * self.l)).sqrt()
    }

    /// `Ω0 = √(g / l)`.
    pub fn omega0(&self) -> f64 {
        (self.g / self.l).sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m1 > 0.0 && self.m2 > 0.0 && self.l > 0.0 && self.g > 0.0 && self.v != 0.0) {
            return Err(PmtoError::InvalidArgument(format!(
                "crane masses, length, gravity must be positive and v non-zero: {self:?}"
            )));
        }
        Ok(())
    }
}

/// Ranges of the operating-condition variant: `l`, `m2`, resistance coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CraneConditionRanges {
    pub l: (f64, f64),
    pub m2: (f64, f64),
    pub resistance_coefficient: (f64, f64),
}

impl Default for CraneConditionRanges {
    fn default() -> Self {
        Self {
            l: (5.0, 8.0),
            m2: (0.8e3, 1.2e4),
            resistance_coefficient: (0.005, 0.015),
        }
    }
}

pub fn solution_bounds(variant: CraneVariant) -> Bounds {
    match variant {
        CraneVariant::Delays => Bounds::uniform(3, 0.0, 2.0),
        CraneVariant::Conditions => Bounds::uniform(3, 0.0, 3.0),
    }
}

pub fn task_bounds(variant: CraneVariant, ranges: &CraneConditionRanges) -> Bounds {
    match variant {
        CraneVariant::Delays => Bounds::uniform(3, 0.0, 1.0),
        CraneVariant::Conditions => Bounds {
            lower: vec![ranges.l.0, ranges.m2.0, ranges.resistance_coefficient.0],
            upper: vec![ranges.l.1, ranges.m2.1, ranges.resistance_coefficient.1],
        },
    }
}

/// Terminal oscillation energy after the three switching intervals.
pub fn terminal_energy(t: &[f64; 3], p: &CraneParams) -> f64 {
    let (t1, t2, t3) = (t[0], t[1], t[2]);
    let total = t1 + t2 + t3;
    let om = p.omega();
    let om0 = p.omega0();
    let om0_2 = om0 * om0;
    let om0_4 = om0_2 * om0_2;
    let df = p.f_max - p.f_min;

    let cos_part = p.f_max - p.resistance - df * ((t3 * om).cos() - ((t2 + t3) * om).cos())
        + (p.resistance - p.f_max) * (total * om).cos();
    let sin_part = df * ((t3 * om).sin() - ((t2 + t3) * om).sin()) + (p.f_max - p.resistance) * (total * om).sin();
    let te2 = p.m1 * p.v * om.powi(3) - om * om0_2 * (p.f_min * t2 + p.f_max * (t1 + t3) - total * p.resistance)
        + om0_2 * sin_part;

    p.m2 / (2.0 * p.m1 * p.m1 * om.powi(6))
        * (om * om * om0_4 * cos_part * cos_part + om0_4 * sin_part * sin_part + te2 * te2)
}

/// Objective for effective switching times `t` under constants `p`.
pub fn crane_objective(t: &[f64; 3], p: &CraneParams) -> Result<f64> {
    p.validate()?;
    let te = terminal_energy(t, p);
    let energy = if te >= p.energy_threshold {
        p.penalty_weight * te
    } else {
        0.0
    };
    let f = 2.0 * energy / (p.m2 * p.v * p.v) + (t[0] + t[1] + t[2]) * p.omega() / (2.0 * PI);
    if !f.is_finite() {
        return Err(PmtoError::NonFinite(format!(
            "crane objective at t = {t:?}, TE = {te}, params = {p:?}"
        )));
    }
    Ok(f)
}

/// Evaluates a variant: delays are added to the switching times (variant I),
/// or the operating conditions replace `l`, `m2` and `W` (variant II).
pub fn crane_evaluate(t: &[f64], theta: &[f64], variant: CraneVariant, base: &CraneParams) -> Result<f64> {
    check_dim(3, t.len())?;
    check_dim(3, theta.len())?;
    match variant {
        CraneVariant::Delays => {
            let eff = [t[0] + theta[0], t[1] + theta[1], t[2] + theta[2]];
            crane_objective(&eff, base)
        }
        CraneVariant::Conditions => {
            let mut p = base.clone();
            p.l = theta[0];
            p.m2 = theta[1];
            p.resistance = theta[2] * p.g * (p.m1 + p.m2);
            crane_objective(&[t[0], t[1], t[2]], &p)
        }
    }
}
