//! Axis-aligned boxes for solutions and task parameters.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, PmtoError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        check_dim(lower.len(), upper.len())?;
        if lower.is_empty() {
            return Err(PmtoError::InvalidArgument("empty bounds".into()));
        }
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(PmtoError::InvalidArgument(format!(
                    "bad interval [{lo}, {hi}] in dimension {i}"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// The unit box `[0, 1]^dim`.
    pub fn unit(dim: usize) -> Self {
        Self {
            lower: vec![0.0; dim],
            upper: vec![1.0; dim],
        }
    }

    pub fn uniform(dim: usize, lo: f64, hi: f64) -> Self {
        Self {
            lower: vec![lo; dim],
            upper: vec![hi; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn width(&self, i: usize) -> f64 {
        self.upper[i] - self.lower[i]
    }

    /// True when every dimension has positive width.
    pub fn is_non_degenerate(&self) -> bool {
        (0..self.dim()).all(|i| self.width(i) > 0.0)
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim()
            && p.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    pub fn clamp(&self, p: &mut [f64]) {
        for (v, (lo, hi)) in p.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *v = v.clamp(*lo, *hi);
        }
    }

    /// Maps a point of the unit cube into this box.
    pub fn from_unit(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .enumerate()
            .map(|(i, t)| self.lower[i] + t * self.width(i))
            .collect()
    }

    /// Maps a point of this box into the unit cube. Zero-width dimensions map to 0.
    pub fn to_unit(&self, p: &[f64]) -> Vec<f64> {
        p.iter()
            .enumerate()
            .map(|(i, v)| {
                let w = self.width(i);
                if w > 0.0 {
                    (v - self.lower[i]) / w
                } else {
                    0.0
                }
            })
            .collect()
    }

    /// Concatenation `self × other`, used for unified `(x, θ)` inputs.
    pub fn product(&self, other: &Bounds) -> Bounds {
        Bounds {
            lower: self.lower.iter().chain(&other.lower).copied().collect(),
            upper: self.upper.iter().chain(&other.upper).copied().collect(),
        }
    }
}
