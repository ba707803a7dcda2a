//! Space-filling designs: Latin hypercube and scrambled Sobol points.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::bounds::Bounds;

/// Latin hypercube sample of `n` points in `bounds`: each dimension is cut
/// into `n` equal strata and every stratum holds exactly one point.
pub fn latin_hypercube<R: Rng + ?Sized>(n: usize, bounds: &Bounds, rng: &mut R) -> Vec<Vec<f64>> {
    let d = bounds.dim();
    let mut points = vec![vec![0.0; d]; n];
    let mut perm: Vec<usize> = (0..n).collect();
    for j in 0..d {
        perm.shuffle(rng);
        for (i, p) in points.iter_mut().enumerate() {
            let u = (perm[i] as f64 + rng.gen::<f64>()) / n as f64;
            p[j] = bounds.lower[j] + u * bounds.width(j);
        }
    }
    points
}

/// Owen-scrambled Sobol sequence of `n` points in `bounds`, reproducible from `seed`.
pub fn sobol_points(n: usize, bounds: &Bounds, seed: u64) -> Vec<Vec<f64>> {
    let d = bounds.dim();
    assert!(
        d <= sobol_burley::NUM_DIMENSIONS as usize,
        "too many dimensions for Sobol"
    );
    let seed = (seed ^ (seed >> 32)) as u32;
    (0..n)
        .map(|i| {
            (0..d)
                .map(|j| {
                    let u = sobol_burley::sample(i as u32, j as u32, seed) as f64;
                    bounds.lower[j] + u * bounds.width(j)
                })
                .collect()
        })
        .collect()
}

/// `n` independent uniform points in `bounds`.
pub fn uniform_points<R: Rng + ?Sized>(n: usize, bounds: &Bounds, rng: &mut R) -> Vec<Vec<f64>> {
    (0..n).map(|_| uniform_point(bounds, rng)).collect()
}

pub fn uniform_point<R: Rng + ?Sized>(bounds: &Bounds, rng: &mut R) -> Vec<f64> {
    (0..bounds.dim())
        .map(|j| bounds.lower[j] + rng.gen::<f64>() * bounds.width(j))
        .collect()
}

/// Independent seed for stream `stream`, item `index` under a base seed (SplitMix64 mixing).
pub fn derive_seed(base: u64, stream: u64, index: u64) -> u64 {
    let mut z = base
        .wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(index.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
