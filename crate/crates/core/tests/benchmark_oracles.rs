mod common;

use common::{crane_oracle, rel_err, truss_oracle};
use pmto::problems::ProblemSpec;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn random_point<R: rand::Rng>(b: &pmto::Bounds, rng: &mut R) -> Vec<f64> {
    pmto::sampling::uniform_point(b, rng)
}

#[test]
fn synthetic_optima_are_zero() {
    for name in [
        "sphere-1",
        "sphere-2",
        "ackley-1",
        "ackley-2",
        "rastrigin-1",
        "rastrigin-2",
        "griewank-1",
        "griewank-2",
    ] {
        let p = ProblemSpec::by_name(name).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let theta = random_point(&p.task_bounds, &mut rng);
            let (x, f) = p.known_optimum(&theta).unwrap();
            assert!(p.solution_bounds.contains(&x), "{name}: optimum outside the box");
            let v = p.evaluate(&x, &theta).unwrap();
            assert!(v.abs() <= 1e-12 && f.abs() <= 1e-12, "{name}: f* = {v}");
        }
    }
}

#[test]
fn crane_matches_independent_transcription() {
    for (name, delays) in [("crane-1", true), ("crane-2", false)] {
        let p = ProblemSpec::by_name(name).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let x = random_point(&p.solution_bounds, &mut rng);
            let theta = random_point(&p.task_bounds, &mut rng);
            let got = p.evaluate(&x, &theta).unwrap();
            let want = crane_oracle(&x, &theta, delays);
            assert!(
                rel_err(got, want) <= 1e-9,
                "{name} at {x:?}, {theta:?}: {got} vs {want}"
            );
        }
    }
}

#[test]
fn truss_matches_independent_transcription() {
    let p = ProblemSpec::by_name("truss").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..20 {
        let x = random_point(&p.solution_bounds, &mut rng);
        let theta = random_point(&p.task_bounds, &mut rng);
        let got = p.evaluate(&x, &theta).unwrap();
        assert!(rel_err(got, truss_oracle(&x, &theta)) <= 1e-9);
    }
    let nominal = p.evaluate(&[0.0; 3], &[2.0, 2.0, 1.0]).unwrap();
    assert!((nominal - truss_oracle(&[0.0; 3], &[2.0, 2.0, 1.0])).abs() <= 1e-6);
}
