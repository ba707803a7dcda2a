use serde::{Deserialize, Serialize};

use crate::error::{check_dim, PmtoError, Result};

/// ARD squared-exponential kernel parameters plus observation noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpHyperparams {
    pub lengthscales: Vec<f64>,
    pub signal_variance: f64,
    pub noise_variance: f64,
}

impl GpHyperparams {
    pub fn new(lengthscales: Vec<f64>, signal_variance: f64, noise_variance: f64) -> Result<Self> {
        let h = Self {
            lengthscales,
            signal_variance,
            noise_variance,
        };
        h.validate()?;
        Ok(h)
    }

    /// Default starting point in normalized units: `ℓ = 0.5`, `sv = 1`, `σ² = 1e-2`.
    pub fn initial(dim: usize) -> Self {
        Self {
            lengthscales: vec![0.5; dim],
            signal_variance: 1.0,
            noise_variance: 1e-2,
        }
    }

    /// Unit lengthscales and signal variance with the given noise.
    pub fn unit(dim: usize, noise_variance: f64) -> Self {
        Self {
            lengthscales: vec![1.0; dim],
            signal_variance: 1.0,
            noise_variance,
        }
    }

    pub fn dim(&self) -> usize {
        self.lengthscales.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.lengthscales.is_empty() {
            return Err(PmtoError::InvalidArgument("no lengthscales".into()));
        }
        if self.lengthscales.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(PmtoError::InvalidArgument(format!(
                "lengthscales must be positive: {:?}",
                self.lengthscales
            )));
        }
        if !(self.signal_variance.is_finite() && self.signal_variance > 0.0) {
            return Err(PmtoError::InvalidArgument(format!(
                "signal variance must be positive: {}",
                self.signal_variance
            )));
        }
        if !(self.noise_variance.is_finite() && self.noise_variance >= 0.0) {
            return Err(PmtoError::InvalidArgument(format!(
                "noise variance must be non-negative: {}",
                self.noise_variance
            )));
        }
        Ok(())
    }

    /// Parameters in the log space used by the optimizer:
    /// `[ln ℓ_1, …, ln ℓ_d, ln sv, ln σ²]`.
    pub fn to_log(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.lengthscales.iter().map(|l| l.ln()).collect();
        v.push(self.signal_variance.ln());
        v.push(self.noise_variance.max(f64::MIN_POSITIVE).ln());
        v
    }

    pub fn from_log(eta: &[f64]) -> Self {
        let d = eta.len() - 2;
        Self {
            lengthscales: eta[..d].iter().map(|e| e.exp()).collect(),
            signal_variance: eta[d].exp(),
            noise_variance: eta[d + 1].exp(),
        }
    }

    /// Kernel value without argument checks; `a` and `b` must have `dim()` entries.
    #[inline]
    pub(crate) fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut s = 0.0;
        for ((x, y), l) in a.iter().zip(b).zip(&self.lengthscales) {
            let z = (x - y) / l;
            s += z * z;
        }
        self.signal_variance * (-0.5 * s).exp()
    }
}

/// `sv · exp(−½ Σ ((a_i − b_i) / ℓ_i)²)`.
pub fn rbf_kernel(a: &[f64], b: &[f64], h: &GpHyperparams) -> Result<f64> {
    check_dim(h.dim(), a.len())?;
    check_dim(h.dim(), b.len())?;
    Ok(h.eval(a, b))
}
