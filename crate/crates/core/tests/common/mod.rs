//! Instance generators and independent reference implementations shared by
//! the integration tests and the acceptance runner.
#![allow(dead_code)]

use pmto::gp::{GpHyperparams, TrainingSet};
use pmto::task_model::{task_model_from_hyperparams, EliteRecord, TaskModel};
use pmto::Bounds;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A random box with lower corner in [-2, 0] and widths in [1, 5].
pub fn random_box<R: Rng>(dim: usize, rng: &mut R) -> Bounds {
    let lower: Vec<f64> = (0..dim).map(|_| rng.gen_range(-2.0..0.0)).collect();
    let upper = lower.iter().map(|l| l + rng.gen_range(1.0..5.0)).collect();
    Bounds::new(lower, upper).unwrap()
}

/// A smooth regression problem with 3..=10 points in 1..=3 dimensions and
/// hyperparameters in the well-conditioned range `ℓ ∈ [0.05, 0.3]`.
pub fn gp_instance<R: Rng>(noise: f64, rng: &mut R) -> (TrainingSet, GpHyperparams) {
    let d = rng.gen_range(1..=3);
    let n = rng.gen_range(3..=10);
    let bounds = random_box(d, rng);
    let freq: Vec<f64> = (0..d).map(|_| rng.gen_range(1.0..4.0)).collect();
    let offset = rng.gen_range(-5.0..5.0);
    let mut set = TrainingSet::new(bounds.clone());
    for _ in 0..n {
        let u: Vec<f64> = (0..d).map(|_| rng.gen()).collect();
        let y = offset + 2.0 * u.iter().zip(&freq).map(|(a, w)| (a * w).sin()).sum::<f64>();
        set.push(bounds.from_unit(&u), y).unwrap();
    }
    let ell = (0..d).map(|_| rng.gen_range(0.05..0.3)).collect();
    let h = GpHyperparams::new(ell, rng.gen_range(0.5..2.0), noise).unwrap();
    (set, h)
}

/// Terminal oscillation energy of the crane, written from the closed form with
/// `a = F_max − W`, `b = F_max − F_min` and phases `φ = t·Ω`.
#[allow(clippy::too_many_arguments)]
pub fn crane_terminal_energy(
    t: [f64; 3],
    m1: f64,
    m2: f64,
    v: f64,
    l: f64,
    w_res: f64,
    f_min: f64,
    f_max: f64,
    g: f64,
) -> f64 {
    let big = (g * (m1 + m2) / (m1 * l)).sqrt();
    let small_sq = g / l;
    let total = t[0] + t[1] + t[2];
    let (p3, p23, pt) = (t[2] * big, (t[1] + t[2]) * big, total * big);
    let a = f_max - w_res;
    let b = f_max - f_min;
    let c = a - b * (p3.cos() - p23.cos()) - a * pt.cos();
    let s = b * (p3.sin() - p23.sin()) + a * pt.sin();
    let e2 =
        m1 * v * big.powi(3) - big * small_sq * (f_min * t[1] + f_max * (t[0] + t[2]) - total * w_res) + small_sq * s;
    let pre = m2 / (2.0 * m1 * m1 * big.powi(6));
    pre * (big * big * small_sq * small_sq * c * c + small_sq * small_sq * s * s + e2 * e2)
}

/// Crane objective for variant I (delays) or II (conditions `(l, m2, c)`).
pub fn crane_oracle(t: &[f64], theta: &[f64], delays: bool) -> f64 {
    let g = 9.81;
    let m1 = 4.2e4;
    let v = 0.7;
    let (tt, l, m2, w_res) = if delays {
        let m2 = 1e4;
        (
            [t[0] + theta[0], t[1] + theta[1], t[2] + theta[2]],
            6.5,
            m2,
            0.01 * g * (m1 + m2),
        )
    } else {
        let (l, m2, c) = (theta[0], theta[1], theta[2]);
        ([t[0], t[1], t[2]], l, m2, c * g * (m1 + m2))
    };
    let te = crane_terminal_energy(tt, m1, m2, v, l, w_res, 0.0, 2.41e4, g);
    let e = if te >= 0.01 { 1e6 * te } else { 0.0 };
    let big = (g * (m1 + m2) / (m1 * l)).sqrt();
    2.0 * e / (m2 * v * v) + (tt[0] + tt[1] + tt[2]) * big / (2.0 * std::f64::consts::PI)
}

/// Weighted truss volume and stress with relative errors `x` on design `θ`.
pub fn truss_oracle(x: &[f64], theta: &[f64]) -> f64 {
    let ranges = [98.0, 98.0, 2.0];
    let a1 = theta[0] + x[0] * ranges[0];
    let a2 = theta[1] + x[1] * ranges[1];
    let h = theta[2] + x[2] * ranges[2];
    let f1 = a1 * (16.0 + h * h).sqrt() + a2 * (1.0 + h * h).sqrt();
    let f2 = 20.0 * (16.0 + h * h).sqrt() / (a1 * h);
    10.0 * f1 + 1e-5 * f2
}

/// Linear-interpolation quantile by direct rank arithmetic.
pub fn quantile_oracle(values: &[f64], alpha: f64) -> f64 {
    let mut s = values.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let pos = alpha * (s.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(s.len() - 1);
    s[lo] + (pos - lo as f64) * (s[hi] - s[lo])
}

/// `|a − b| / max(|a|, |b|, tiny)`.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

/// A 1-D-task, 1-D-solution task model with fixed kernel settings.
pub fn one_dim_task_model(sv: f64, ell: f64) -> TaskModel {
    let recs: Vec<EliteRecord> = [(0.0, 0.1), (0.4, 0.5), (1.0, 0.9)]
        .iter()
        .map(|&(t, x)| EliteRecord {
            theta: vec![t],
            best_x: vec![x],
            best_y: 0.0,
        })
        .collect();
    let h = GpHyperparams::new(vec![ell], sv, 1e-6).unwrap();
    task_model_from_hyperparams(&recs, &Bounds::unit(1), &Bounds::unit(1), vec![h]).unwrap()
}

/// A multi-task dataset over `(x, θ)` with 2..=4 tasks and 1..=5 samples each.
pub fn multi_task_instance(seed: u64) -> (TrainingSet, Vec<Vec<f64>>, GpHyperparams) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dx = rng.gen_range(1..=2);
    let dt = rng.gen_range(1..=2);
    let tasks: Vec<Vec<f64>> = (0..rng.gen_range(2..=4))
        .map(|_| (0..dt).map(|_| rng.gen()).collect())
        .collect();
    let mut set = TrainingSet::new(Bounds::unit(dx + dt));
    for t in &tasks {
        for _ in 0..rng.gen_range(1..=5) {
            let mut z: Vec<f64> = (0..dx).map(|_| rng.gen()).collect();
            z.extend_from_slice(t);
            set.push(z, rng.gen_range(-1.0..1.0)).unwrap();
        }
    }
    let ell = (0..dx + dt).map(|_| rng.gen_range(0.05..2.0)).collect();
    let h = GpHyperparams::new(ell, rng.gen_range(0.5..2.0), rng.gen_range(1e-3..1.0)).unwrap();
    (set, tasks, h)
}
