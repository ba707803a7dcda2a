mod common;

use common::quantile_oracle;
use pmto::acquisition::{maximize_ucb_scored, ucb_score, AcquisitionConfig};
use pmto::algorithms::{initial_tasks, run_single_task_baseline, RunConfig};
use pmto::evaluation::quantiles;
use pmto::gp::{fit_posterior, GpHyperparams, TrainingSet};
use pmto::problems::ProblemSpec;
use pmto::sampling::uniform_point;
use pmto::task_model::{task_model_from_hyperparams, EliteRecord};
use pmto::Bounds;
use proptest::prelude::*;
use rand::{seq::SliceRandom, Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn exploitation_beats_a_dense_grid() {
    let xs: Vec<f64> = vec![0.0, 0.15, 0.45, 0.6, 0.8, 1.0];
    let set = TrainingSet::from_data(
        xs.iter().map(|x| vec![*x]).collect(),
        xs.iter().map(|x| (x - 0.3) * (x - 0.3)).collect(),
        Bounds::unit(1),
    )
    .unwrap();
    let model = fit_posterior(&set, &GpHyperparams::new(vec![0.4], 1.0, 1e-6).unwrap()).unwrap();
    let cfg = AcquisitionConfig {
        beta: 0.0,
        ..AcquisitionConfig::default()
    };
    let (x, score) = maximize_ucb_scored(&model, None, &Bounds::unit(1), &cfg).unwrap();
    let grid_best = (0..=10_000)
        .map(|i| ucb_score(&model, &[i as f64 / 1e4], None, 0.0).unwrap())
        .fold(f64::NEG_INFINITY, f64::max);
    assert!(score >= grid_best - 1e-9, "{score} < grid {grid_best}");
    assert!((x[0] - 0.3).abs() < 0.05, "argmin at {}", x[0]);
}

#[test]
fn baseline_beats_random_search() {
    let problem = ProblemSpec::by_name("sphere-1").unwrap();
    let (mut bo, mut rs) = (0.0, 0.0);
    for seed in 0..3 {
        let cfg = RunConfig {
            n_init: 10,
            n_tot: 40,
            initial_tasks: 2,
            seed,
            ..RunConfig::default()
        };
        let tasks = initial_tasks(&problem, &cfg);
        let out = run_single_task_baseline(&problem, &tasks, &cfg).unwrap();
        bo += out.trace.final_best_all().iter().sum::<f64>();
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        for t in &tasks {
            rs += (0..20)
                .map(|_| {
                    problem
                        .evaluate(&uniform_point(&problem.solution_bounds, &mut rng), t)
                        .unwrap()
                })
                .fold(f64::INFINITY, f64::min);
        }
    }
    assert!(bo < rs, "GP search total {bo} vs random {rs}");
}

#[test]
fn vanishing_task_lengthscale_decouples_tasks() {
    // Both tasks share target values, so the joint and per-task standardizations agree.
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let xs1: Vec<Vec<f64>> = (0..6).map(|_| vec![rng.gen(), rng.gen()]).collect();
    let xs2: Vec<Vec<f64>> = (0..6).map(|_| vec![rng.gen(), rng.gen()]).collect();
    let ys: Vec<f64> = (0..6).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let (t1, t2) = (0.2, 0.7);
    let mut joint = TrainingSet::new(Bounds::unit(3));
    for (x, y) in xs1.iter().zip(&ys) {
        joint.push(vec![x[0], x[1], t1], *y).unwrap();
    }
    for (x, y) in xs2.iter().zip(&ys) {
        joint.push(vec![x[0], x[1], t2], *y).unwrap();
    }
    let single = TrainingSet::from_data(xs1.clone(), ys.clone(), Bounds::unit(2)).unwrap();
    let hj = GpHyperparams::new(vec![0.3, 0.4, 1e-3], 1.2, 1e-3).unwrap();
    let hs = GpHyperparams::new(vec![0.3, 0.4], 1.2, 1e-3).unwrap();
    let mj = fit_posterior(&joint, &hj).unwrap();
    let ms = fit_posterior(&single, &hs).unwrap();
    for _ in 0..20 {
        let q: Vec<f64> = vec![rng.gen(), rng.gen()];
        let pj = mj.predict(&[q[0], q[1], t1]).unwrap();
        let ps = ms.predict(&q).unwrap();
        assert!((pj.mean - ps.mean).abs() <= 1e-6 && (pj.variance - ps.variance).abs() <= 1e-6);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn task_model_ignores_record_order(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut recs: Vec<EliteRecord> = (0..8)
            .map(|_| EliteRecord { theta: vec![rng.gen(), rng.gen()], best_x: vec![rng.gen(), rng.gen(), rng.gen()], best_y: rng.gen() })
            .collect();
        let hs: Vec<GpHyperparams> = (0..3).map(|_| GpHyperparams::new(vec![0.3, 0.5], 1.0, 1e-3).unwrap()).collect();
        let (sb, tb) = (Bounds::unit(3), Bounds::unit(2));
        let a = task_model_from_hyperparams(&recs, &sb, &tb, hs.clone()).unwrap();
        recs.shuffle(&mut rng);
        let b = task_model_from_hyperparams(&recs, &sb, &tb, hs).unwrap();
        for _ in 0..10 {
            let q = [rng.gen(), rng.gen()];
            let (pa, pb) = (a.predict_solution(&q).unwrap(), b.predict_solution(&q).unwrap());
            for (u, v) in pa.iter().zip(&pb) {
                prop_assert!((u - v).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn quantiles_match_rank_arithmetic(values in prop::collection::vec(-1e3f64..1e3, 1..200), alpha in 0.0f64..=1.0) {
        let got = quantiles(&values, &[alpha]).unwrap()[0];
        let want = quantile_oracle(&values, alpha);
        prop_assert!((got - want).abs() <= 1e-9 * (1.0 + want.abs()));
    }
}
