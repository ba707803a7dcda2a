use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use super::kernel::GpHyperparams;
use super::{JITTER_MAX, JITTER_START, TARGET_STD_FLOOR, VARIANCE_TOLERANCE};
use crate::bounds::Bounds;
use crate::error::{check_dim, PmtoError, Result};

/// Regression data together with the box used to normalize its inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSet {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
    pub input_bounds: Bounds,
}

/// Input affine map and target standardization recorded for one fit.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalization {
    pub input_bounds: Bounds,
    pub target_mean: f64,
    pub target_std: f64,
}

impl Normalization {
    pub fn standardize(&self, y: f64) -> f64 {
        (y - self.target_mean) / self.target_std
    }
}

impl TrainingSet {
    pub fn new(input_bounds: Bounds) -> Self {
        Self {
            inputs: Vec::new(),
            targets: Vec::new(),
            input_bounds,
        }
    }

    pub fn from_data(inputs: Vec<Vec<f64>>, targets: Vec<f64>, input_bounds: Bounds) -> Result<Self> {
        check_dim(inputs.len(), targets.len())?;
        let mut set = Self::new(input_bounds);
        for (x, y) in inputs.into_iter().zip(targets) {
            set.push(x, y)?;
        }
        Ok(set)
    }

    pub fn push(&mut self, x: Vec<f64>, y: f64) -> Result<()> {
        check_dim(self.input_bounds.dim(), x.len())?;
        self.inputs.push(x);
        self.targets.push(y);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.input_bounds.dim()
    }

    /// Population mean and standard deviation of the targets, the latter floored.
    pub fn normalization(&self) -> Normalization {
        let n = self.targets.len().max(1) as f64;
        let mean = self.targets.iter().sum::<f64>() / n;
        let var = self.targets.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / n;
        Normalization {
            input_bounds: self.input_bounds.clone(),
            target_mean: mean,
            target_std: var.sqrt().max(TARGET_STD_FLOOR),
        }
    }

    pub(crate) fn unit_inputs(&self) -> Vec<Vec<f64>> {
        self.inputs.iter().map(|x| self.input_bounds.to_unit(x)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Posterior {
    pub mean: f64,
    pub variance: f64,
}

impl Posterior {
    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// A GP conditioned on a training set: Cholesky factor of
/// `K + (σ² + jitter) I` and `α = (K + σ² I)⁻¹ y` over standardized targets.
///
/// `α` is refined against the unjittered matrix, so means interpolate
/// noiseless data; variances use the jittered factor.
///
/// Immutable once built; prediction takes `&self` only.
#[derive(Debug, Clone)]
pub struct GpModel {
    hyperparams: GpHyperparams,
    training: TrainingSet,
    norm: Normalization,
    unit_inputs: Vec<Vec<f64>>,
    y_std: DVector<f64>,
    chol: Option<Cholesky<f64, Dyn>>,
    alpha: DVector<f64>,
    jitter: f64,
}

/// Conditions a GP on `training` under fixed hyperparameters.
///
/// Jitter starts at `1e-6·sv` and grows tenfold on each failed factorization
/// up to `1e-2·sv`.
pub fn fit_posterior(training: &TrainingSet, h: &GpHyperparams) -> Result<GpModel> {
    h.validate()?;
    check_dim(training.dim(), h.dim())?;
    if training.is_empty() {
        return Err(PmtoError::InsufficientData { needed: 1, got: 0 });
    }
    if let Some(y) = training.targets.iter().find(|y| !y.is_finite()) {
        return Err(PmtoError::NonFinite(format!("training target {y}")));
    }
    let norm = training.normalization();
    let unit_inputs = training.unit_inputs();
    let y_std = DVector::from_iterator(training.len(), training.targets.iter().map(|y| norm.standardize(*y)));
    let mut k = kernel_matrix(&unit_inputs, h);
    let (chol, jitter) = factorize(&k, h)?;
    for i in 0..k.nrows() {
        k[(i, i)] += h.noise_variance;
    }
    let alpha = refined_solve(&k, &y_std);
    Ok(GpModel {
        hyperparams: h.clone(),
        training: training.clone(),
        norm,
        unit_inputs,
        y_std,
        chol: Some(chol),
        alpha,
        jitter,
    })
}

/// Most correction steps spent on `α` beyond the first solve.
const REFINE_STEPS: usize = 5;

/// Solves `a x = y` for the interpolating weights. The unjittered matrix is
/// factorized directly when it is numerically positive definite; otherwise the
/// minimum-norm solution over eigenvalues above rounding level is used.
fn refined_solve(a: &DMatrix<f64>, y: &DVector<f64>) -> DVector<f64> {
    match Cholesky::new(a.clone()) {
        Some(chol) => refine(a, y, |r| chol.solve(r)),
        None => {
            let eig = a.clone().symmetric_eigen();
            let cutoff = eig.eigenvalues.max() * a.nrows() as f64 * f64::EPSILON;
            let inv = eig.eigenvalues.map(|l| if l > cutoff { 1.0 / l } else { 0.0 });
            let v = &eig.eigenvectors;
            refine(a, y, |r| v * (v.tr_mul(r)).component_mul(&inv))
        }
    }
}

fn refine(a: &DMatrix<f64>, y: &DVector<f64>, solve: impl Fn(&DVector<f64>) -> DVector<f64>) -> DVector<f64> {
    let mut x = solve(y);
    let tol = 1e-13 * y.norm();
    for _ in 0..REFINE_STEPS {
        let r = y - a * &x;
        if r.norm() <= tol {
            break;
        }
        x += solve(&r);
    }
    x
}

pub(crate) fn kernel_matrix(unit_inputs: &[Vec<f64>], h: &GpHyperparams) -> DMatrix<f64> {
    let n = unit_inputs.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = h.signal_variance;
        for j in 0..i {
            let v = h.eval(&unit_inputs[i], &unit_inputs[j]);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

/// Cholesky of `k + (σ² + jitter) I` under the escalation policy.
pub(crate) fn factorize(k: &DMatrix<f64>, h: &GpHyperparams) -> Result<(Cholesky<f64, Dyn>, f64)> {
    let sv = h.signal_variance;
    let mut jitter = JITTER_START * sv;
    let max = JITTER_MAX * sv * (1.0 + 1e-9);
    loop {
        let mut a = k.clone();
        for i in 0..a.nrows() {
            a[(i, i)] += h.noise_variance + jitter;
        }
        if let Some(c) = a.cholesky() {
            return Ok((c, jitter));
        }
        if jitter * 10.0 > max {
            return Err(PmtoError::NumericalFailure { jitter });
        }
        jitter *= 10.0;
    }
}

impl GpModel {
    /// A model with no data: predictions return the prior (mean 0, variance `sv`).
    pub fn prior(h: &GpHyperparams, input_bounds: Bounds) -> Result<Self> {
        h.validate()?;
        check_dim(input_bounds.dim(), h.dim())?;
        let training = TrainingSet::new(input_bounds);
        let norm = training.normalization();
        Ok(Self {
            hyperparams: h.clone(),
            norm: Normalization {
                target_mean: 0.0,
                target_std: 1.0,
                ..norm
            },
            training,
            unit_inputs: Vec::new(),
            y_std: DVector::zeros(0),
            chol: None,
            alpha: DVector::zeros(0),
            jitter: 0.0,
        })
    }

    pub fn hyperparams(&self) -> &GpHyperparams {
        &self.hyperparams
    }

    pub fn training(&self) -> &TrainingSet {
        &self.training
    }

    pub fn normalization(&self) -> &Normalization {
        &self.norm
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn dim(&self) -> usize {
        self.hyperparams.dim()
    }

    pub fn len(&self) -> usize {
        self.unit_inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.unit_inputs.is_empty()
    }

    /// Lower Cholesky factor of `K + (σ² + jitter) I`; `None` for a prior model.
    pub fn cholesky_factor(&self) -> Option<DMatrix<f64>> {
        self.chol.as_ref().map(|c| c.l())
    }

    /// `K + (σ² + jitter) I` over the stored training inputs.
    pub fn regularized_kernel_matrix(&self) -> DMatrix<f64> {
        let mut k = kernel_matrix(&self.unit_inputs, &self.hyperparams);
        for i in 0..k.nrows() {
            k[(i, i)] += self.hyperparams.noise_variance + self.jitter;
        }
        k
    }

    /// Kernel value between two raw (un-normalized) inputs.
    pub fn kernel(&self, a: &[f64], b: &[f64]) -> f64 {
        let ua = self.norm.input_bounds.to_unit(a);
        let ub = self.norm.input_bounds.to_unit(b);
        self.hyperparams.eval(&ua, &ub)
    }

    /// Posterior at a raw input, de-standardized to target units.
    pub fn predict(&self, query: &[f64]) -> Result<Posterior> {
        check_dim(self.dim(), query.len())?;
        let u = self.norm.input_bounds.to_unit(query);
        let (mean, var) = self.predict_unit(&u)?;
        Ok(self.destandardize(mean, var))
    }

    /// Posterior in standardized target units.
    pub fn predict_standardized(&self, query: &[f64]) -> Result<Posterior> {
        check_dim(self.dim(), query.len())?;
        let u = self.norm.input_bounds.to_unit(query);
        let (mean, variance) = self.predict_unit(&u)?;
        Ok(Posterior { mean, variance })
    }

    /// Posteriors for many raw inputs, sharing one triangular solve.
    pub fn predict_many(&self, queries: &[Vec<f64>]) -> Result<Vec<Posterior>> {
        for q in queries {
            check_dim(self.dim(), q.len())?;
        }
        let sv = self.hyperparams.signal_variance;
        let Some(chol) = &self.chol else {
            return Ok(queries.iter().map(|_| self.destandardize(0.0, sv)).collect());
        };
        let n = self.len();
        let units: Vec<Vec<f64>> = queries.iter().map(|q| self.norm.input_bounds.to_unit(q)).collect();
        let mut kq = DMatrix::zeros(n, units.len());
        for (c, u) in units.iter().enumerate() {
            for (r, x) in self.unit_inputs.iter().enumerate() {
                kq[(r, c)] = self.hyperparams.eval(x, u);
            }
        }
        let means = kq.tr_mul(&self.alpha);
        let l = chol.l_dirty();
        l.solve_lower_triangular_mut(&mut kq);
        let mut out = Vec::with_capacity(units.len());
        for c in 0..units.len() {
            let reduction = kq.column(c).norm_squared();
            let var = clamp_variance(sv - reduction)?;
            out.push(self.destandardize(means[c], var));
        }
        Ok(out)
    }

    fn predict_unit(&self, u: &[f64]) -> Result<(f64, f64)> {
        let sv = self.hyperparams.signal_variance;
        let Some(chol) = &self.chol else {
            return Ok((0.0, sv));
        };
        let k = DVector::from_iterator(self.len(), self.unit_inputs.iter().map(|x| self.hyperparams.eval(x, u)));
        let mean = k.dot(&self.alpha);
        let mut v = k;
        chol.l_dirty().solve_lower_triangular_mut(&mut v);
        let var = clamp_variance(sv - v.norm_squared())?;
        Ok((mean, var))
    }

    fn destandardize(&self, mean: f64, var: f64) -> Posterior {
        let s = self.norm.target_std;
        Posterior {
            mean: self.norm.target_mean + s * mean,
            variance: s * s * var,
        }
    }

    /// Log marginal likelihood of the standardized targets and its gradient
    /// with respect to `[ln ℓ_1, …, ln ℓ_d, ln sv, ln σ²]`.
    ///
    /// The data term is `−½ yᵀα` with `α = (K + σ² I)⁻¹ y`, the complexity term
    /// uses the jittered factor of `C = K + (σ² + jitter) I`. The gradient is
    /// `½ αᵀ ∂A/∂η α − ½ tr(C⁻¹ ∂C/∂η)`; jitter scales with `sv` and is
    /// differentiated with it in the second term only.
    pub fn log_marginal_likelihood(&self) -> Result<(f64, Vec<f64>)> {
        let chol = self
            .chol
            .as_ref()
            .ok_or(PmtoError::InsufficientData { needed: 1, got: 0 })?;
        let n = self.len();
        let h = &self.hyperparams;
        let d = h.dim();
        let log_det_half: f64 = chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum();
        let lml =
            -0.5 * self.y_std.dot(&self.alpha) - log_det_half - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();

        let inv = chol.inverse();
        let mut grad = vec![0.0; d + 2];
        let inv_l2: Vec<f64> = h.lengthscales.iter().map(|l| 1.0 / (l * l)).collect();
        for i in 0..n {
            let ai = self.alpha[i];
            grad[d] += 0.5 * (ai * ai * h.signal_variance - inv[(i, i)] * (h.signal_variance + self.jitter));
            grad[d + 1] += 0.5 * (ai * ai - inv[(i, i)]) * h.noise_variance;
            let xi = &self.unit_inputs[i];
            for j in 0..i {
                let xj = &self.unit_inputs[j];
                let kij = h.eval(xi, xj);
                // off-diagonal pairs appear twice in the trace
                let wk = (ai * self.alpha[j] - inv[(i, j)]) * kij;
                grad[d] += wk;
                for k in 0..d {
                    let diff = xi[k] - xj[k];
                    grad[k] += wk * diff * diff * inv_l2[k];
                }
            }
        }
        Ok((lml, grad))
    }

    /// Standardized targets as stored for the fit.
    pub fn standardized_targets(&self) -> &DVector<f64> {
        &self.y_std
    }
}

fn clamp_variance(var: f64) -> Result<f64> {
    if var >= 0.0 {
        Ok(var)
    } else if var >= -VARIANCE_TOLERANCE {
        Ok(0.0)
    } else {
        Err(PmtoError::NegativeVariance(var))
    }
}
