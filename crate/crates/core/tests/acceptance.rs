//! Acceptance runner: prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails. Pass criterion numbers as arguments to run a subset.

mod common;

use std::collections::HashMap;
use std::process::ExitCode;
use std::time::Instant;

use common::{
    crane_oracle, gp_instance, multi_task_instance, one_dim_task_model, quantile_oracle, rel_err, truss_oracle,
};
use pmto::algorithms::{RunConfig, RunOutcome};
use pmto::evaluation::{evaluate_task_model, quantiles};
use pmto::evolution::{
    diversity_objective, evolve_task_traced, polynomial_mutation, sbx_crossover, EaConfig, TaskPool, DIVERSITY_JITTER,
};
use pmto::experiment::{minimax_trial, run_algorithm, run_experiment, Algorithm, ExperimentConfig, GridConfig};
use pmto::gp::{conditional_information_gain, fit_posterior, independent_information_gain, GpHyperparams};
use pmto::problems::ProblemSpec;
use pmto::sampling::uniform_point;
use pmto::task_model::{task_model_from_hyperparams, EliteRecord};
use pmto::Bounds;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEEDS: [u64; 5] = [0, 1, 2, 3, 4];
const GP_INSTANCES: u64 = 50;
const IG_INSTANCES: u64 = 30;
const DRAWS: usize = 10_000;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

/// Desk-scale runs keyed by (problem, algorithm, seed), computed on demand.
#[derive(Default)]
struct Runs {
    cache: HashMap<(String, Algorithm, u64), RunOutcome>,
}

impl Runs {
    fn get(&mut self, problem: &str, alg: Algorithm, seed: u64) -> &RunOutcome {
        self.cache.entry((problem.to_string(), alg, seed)).or_insert_with(|| {
            let spec = ProblemSpec::by_name(problem).unwrap();
            let cfg = RunConfig {
                seed,
                ..RunConfig::desk()
            };
            run_algorithm(&spec, alg, &cfg).unwrap()
        })
    }

    /// `P̄_α` of one run's task model on the 400-point grid.
    fn grid_quantile(&mut self, problem: &str, alg: Algorithm, seed: u64, alpha: f64) -> f64 {
        let spec = ProblemSpec::by_name(problem).unwrap();
        let grid = GridConfig {
            size: Some(400),
            ..GridConfig::default()
        }
        .build(&spec);
        let model = &self.get(problem, alg, seed).task_model;
        let values = evaluate_task_model(model, &spec, &grid).unwrap();
        quantiles(&values, &[alpha]).unwrap()[0]
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    quantile_oracle(&v, 0.5)
}

fn gp_suite() -> Verdict {
    let (mut interp, mut prior, mut mono, mut grad): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    for seed in 0..GP_INSTANCES {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (set, h) = gp_instance(0.0, &mut rng);
        let model = fit_posterior(&set, &h).unwrap();
        for (x, y) in set.inputs.iter().zip(&set.targets) {
            interp = interp.max((model.predict(x).unwrap().mean - y).abs() / (1.0 + y.abs()));
        }

        let (set, h) = gp_instance(1e-3, &mut rng);
        let model = fit_posterior(&set, &h).unwrap();
        let norm = set.normalization();
        let far: Vec<f64> = set.input_bounds.upper.iter().map(|u| u + 1e3).collect();
        let p = model.predict(&far).unwrap();
        let prior_var = h.signal_variance * norm.target_std * norm.target_std;
        prior = prior
            .max((p.mean - norm.target_mean).abs() / (1.0 + norm.target_mean.abs()))
            .max(rel_err(p.variance, prior_var));

        let mut bigger = set.clone();
        let extra = set
            .input_bounds
            .from_unit(&(0..set.dim()).map(|_| rng.gen()).collect::<Vec<_>>());
        bigger.push(extra, rng.gen_range(-3.0..3.0)).unwrap();
        let after = fit_posterior(&bigger, &h).unwrap();
        for _ in 0..20 {
            let q = set
                .input_bounds
                .from_unit(&(0..set.dim()).map(|_| rng.gen()).collect::<Vec<_>>());
            let gap =
                after.predict_standardized(&q).unwrap().variance - model.predict_standardized(&q).unwrap().variance;
            mono = mono.max(gap);
        }

        let noise = rng.gen_range(1e-3..1e-1);
        let (set, h) = gp_instance(noise, &mut rng);
        let (_, g) = fit_posterior(&set, &h).unwrap().log_marginal_likelihood().unwrap();
        let eta = h.to_log();
        for i in 0..eta.len() {
            let lml = |delta: f64| {
                let mut e = eta.clone();
                e[i] += delta;
                fit_posterior(&set, &GpHyperparams::from_log(&e))
                    .unwrap()
                    .log_marginal_likelihood()
                    .unwrap()
                    .0
            };
            let fd = (lml(1e-5) - lml(-1e-5)) / 2e-5;
            grad = grad.max((g[i] - fd).abs() / g[i].abs().max(fd.abs()).max(1e-3));
        }
    }
    verdict(
        interp <= 1e-6 && prior <= 1e-9 && mono <= 1e-8 && grad < 1e-4,
        format!(
            "{GP_INSTANCES} instances: interpolation {interp:.2e} (<=1e-6), prior {prior:.2e}, \
             variance increase {mono:.2e} (<=1e-8), gradient rel err {grad:.2e} (<1e-4)"
        ),
    )
}

fn information_gain() -> Verdict {
    let mut ok = 0;
    let mut cases = 0;
    let mut worst = f64::NEG_INFINITY;
    for seed in 0..IG_INSTANCES {
        let (set, tasks, h) = multi_task_instance(seed);
        let t = &tasks[0];
        let gap =
            conditional_information_gain(&set, t, &h).unwrap() - independent_information_gain(&set, t, &h).unwrap();
        worst = worst.max(gap);
        cases += 1;
        if gap <= 1e-9 {
            ok += 1;
        }
    }
    verdict(
        ok == cases,
        format!("unified <= independent + 1e-9 in {ok}/{cases}; largest excess {worst:.2e}"),
    )
}

fn ea_operators() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let bounds = Bounds::new(vec![-1.0, 0.0, 5.0], vec![1.0, 0.5, 9.0]).unwrap();
    let mut fixed = true;
    let mut contained = true;
    for _ in 0..DRAWS {
        let a = uniform_point(&bounds, &mut rng);
        let (c, d) = sbx_crossover(&a, &a, &bounds, 15.0, 1.0, &mut rng);
        fixed &= c == a && d == a;
        let b = uniform_point(&bounds, &mut rng);
        let (c, d) = sbx_crossover(&a, &b, &bounds, 15.0, 0.9, &mut rng);
        contained &= bounds.contains(&c) && bounds.contains(&d);
        contained &= bounds.contains(&polynomial_mutation(&c, &bounds, 20.0, 0.9, &mut rng));
    }

    let unit = Bounds::unit(2);
    let mut sums = [0.0; 2];
    for _ in 0..DRAWS {
        let (a, b) = sbx_crossover(&[0.2, 0.8], &[0.8, 0.2], &unit, 15.0, 0.9, &mut rng);
        for s in 0..2 {
            sums[s] += a[s] + b[s];
        }
    }
    let sbx_dev = sums
        .iter()
        .map(|s| (s / (2 * DRAWS) as f64 - 0.5).abs())
        .fold(0.0, f64::max);
    let pm_mean = (0..DRAWS)
        .map(|_| polynomial_mutation(&[0.5], &Bounds::unit(1), 20.0, 0.9, &mut rng)[0])
        .sum::<f64>()
        / DRAWS as f64;
    let pm_dev = (pm_mean - 0.5).abs();

    let model = one_dim_task_model(1.3, 0.15);
    let pool = TaskPool::new(vec![vec![0.1], vec![0.45], vec![0.8]]);
    let out = evolve_task_traced(&pool, &model, &Bounds::unit(1), &EaConfig::default()).unwrap();
    let monotone = out.trace.len() == 51 && out.trace.windows(2).all(|w| w[1] >= w[0]);

    verdict(
        fixed && contained && sbx_dev <= 0.02 && pm_dev <= 0.02 && monotone,
        format!(
            "fixed point {fixed}, bounds {contained}, SBX mean dev {sbx_dev:.4}, PM mean dev {pm_dev:.4} (<=0.02), \
             monotone best over 50 generations {monotone}"
        ),
    )
}

fn diversity() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let recs: Vec<EliteRecord> = (0..6)
        .map(|_| EliteRecord {
            theta: vec![rng.gen(), rng.gen()],
            best_x: vec![rng.gen(), rng.gen()],
            best_y: 0.0,
        })
        .collect();
    let hs = vec![
        GpHyperparams::new(vec![0.3, 0.6], 1.0, 1e-4).unwrap(),
        GpHyperparams::new(vec![0.5, 0.2], 1.7, 1e-4).unwrap(),
    ];
    let model = task_model_from_hyperparams(&recs, &Bounds::unit(2), &Bounds::unit(2), hs).unwrap();
    let mut thetas: Vec<Vec<f64>> = (0..5).map(|_| vec![rng.gen(), rng.gen()]).collect();
    let dup = diversity_objective(&thetas[2], &TaskPool::new(thetas.clone()), &model).unwrap();
    let dup_ok = dup <= 2.0 * 1e-6;

    let cand = vec![rng.gen(), rng.gen()];
    let g = diversity_objective(&cand, &TaskPool::new(thetas.clone()), &model).unwrap();
    thetas.rotate_left(2);
    thetas.swap(0, 4);
    let perm = (g - diversity_objective(&cand, &TaskPool::new(thetas), &model).unwrap()).abs();

    let (ell, pool_point, candidate) = (0.3, 0.2, 0.5);
    let one = one_dim_task_model(1.0, ell);
    let rho = (-0.5f64 * ((candidate - pool_point) / ell).powi(2)).exp();
    let g2 = diversity_objective(&[candidate], &TaskPool::new(vec![vec![pool_point]]), &one).unwrap();
    let direct = (1.0 + DIVERSITY_JITTER).powi(2) - rho * rho;
    let direct_gap = (g2 - direct).abs();
    let closed_gap = (g2 - (1.0 - rho * rho)).abs();
    let jitter_allowance = 2.0 * DIVERSITY_JITTER + DIVERSITY_JITTER * DIVERSITY_JITTER;

    verdict(
        dup_ok && direct_gap <= 1e-8 && closed_gap <= 1e-8 + jitter_allowance && perm <= 1e-10,
        format!(
            "duplicate g {dup:.2e} (<=V*1e-6), 2x2 vs jittered determinant {direct_gap:.1e} (<=1e-8), \
             vs 1-rho^2 {closed_gap:.1e} (<=1e-8 + jitter terms), permutation {perm:.1e} (<=1e-10)"
        ),
    )
}

fn benchmarks() -> Verdict {
    let mut synth = 0.0f64;
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
            let theta = uniform_point(&p.task_bounds, &mut rng);
            let (x, _) = p.known_optimum(&theta).unwrap();
            synth = synth.max(p.evaluate(&x, &theta).unwrap().abs());
        }
    }
    let mut crane = 0.0f64;
    for (name, delays) in [("crane-1", true), ("crane-2", false)] {
        let p = ProblemSpec::by_name(name).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let x = uniform_point(&p.solution_bounds, &mut rng);
            let t = uniform_point(&p.task_bounds, &mut rng);
            crane = crane.max(rel_err(p.evaluate(&x, &t).unwrap(), crane_oracle(&x, &t, delays)));
        }
    }
    let p = ProblemSpec::by_name("truss").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut truss = 0.0f64;
    for _ in 0..20 {
        let x = uniform_point(&p.solution_bounds, &mut rng);
        let t = uniform_point(&p.task_bounds, &mut rng);
        truss = truss.max(rel_err(p.evaluate(&x, &t).unwrap(), truss_oracle(&x, &t)));
    }
    let example = p.evaluate(&[0.0; 3], &[2.0, 2.0, 1.0]).unwrap();
    let example_oracle = truss_oracle(&[0.0; 3], &[2.0, 2.0, 1.0]);
    let example_gap = (example - example_oracle).abs();
    verdict(
        synth <= 1e-12 && crane <= 1e-9 && truss <= 1e-9 && example_gap <= 1e-6,
        format!(
            "synthetic f* max {synth:.1e}, crane rel {crane:.1e}, truss rel {truss:.1e}, \
             truss f(0,(2,2,1)) = {example:.6} vs oracle {example_oracle:.6} (quoted 110.7435, off by {:.4})",
            (example - 110.7435).abs()
        ),
    )
}

fn convergence(runs: &mut Runs) -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for problem in ["sphere-1", "ackley-1"] {
        let tasks = RunConfig::desk().initial_tasks;
        let per_task = |runs: &mut Runs, alg| -> Vec<f64> {
            (0..tasks)
                .map(|m| {
                    median(
                        SEEDS
                            .iter()
                            .map(|&s| runs.get(problem, alg, s).trace.final_best(m).unwrap())
                            .collect(),
                    )
                })
                .collect()
        };
        let ft = per_task(runs, Algorithm::PmtoFt);
        let base = per_task(runs, Algorithm::Baseline);
        let wins = ft.iter().zip(&base).filter(|(f, b)| f < b).count();
        pass &= wins as f64 >= 0.6 * tasks as f64;
        parts.push(format!("{problem}: FT wins {wins}/{tasks} tasks (>=60%)"));
    }
    verdict(pass, parts.join("; "))
}

fn online_ordering(runs: &mut Runs) -> Verdict {
    let (mut vs_ft, mut vs_base) = (0, 0);
    let mut rows = Vec::new();
    for &s in &SEEDS {
        let p75 = runs.grid_quantile("sphere-1", Algorithm::Pmto, s, 0.75);
        let f75 = runs.grid_quantile("sphere-1", Algorithm::PmtoFt, s, 0.75);
        let p95 = runs.grid_quantile("sphere-1", Algorithm::Pmto, s, 0.95);
        let b95 = runs.grid_quantile("sphere-1", Algorithm::Baseline, s, 0.95);
        vs_ft += (p75 <= f75) as usize;
        vs_base += (p95 <= b95) as usize;
        rows.push(format!("s{s}: {p75:.3}/{f75:.3}, {p95:.3}/{b95:.3}"));
    }
    verdict(
        vs_ft >= 3 && vs_base >= 4,
        format!(
            "P75 PMTO<=FT in {vs_ft}/5 (>=3), P95 PMTO<=baseline in {vs_base}/5 (>=4) [{}]",
            rows.join("; ")
        ),
    )
}

fn ablation(runs: &mut Runs) -> Verdict {
    let mut wins = 0;
    let mut rows = Vec::new();
    for &s in &SEEDS {
        let evolved = runs.grid_quantile("sphere-2", Algorithm::Pmto, s, 0.75);
        let random = runs.grid_quantile("sphere-2", Algorithm::PmtoRt, s, 0.75);
        wins += (evolved <= random) as usize;
        rows.push(format!("s{s}: {evolved:.3}/{random:.3}"));
    }
    verdict(
        wins >= 3,
        format!("P75 evolved<=random tasks in {wins}/5 (>=3) [{}]", rows.join("; ")),
    )
}

fn minimax_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig {
        problem: "truss-minimax".into(),
        ..ExperimentConfig::default()
    };
    cfg.run = RunConfig::desk();
    cfg.minimax.total_budget = 600;
    cfg
}

fn minimax() -> Verdict {
    let cfg = minimax_config();
    let problem = cfg.problem_spec().unwrap();
    let mut wins = 0;
    let mut rows = Vec::new();
    for &s in &SEEDS {
        let (t, inner, outer, nominal) = minimax_trial(&problem, &cfg, s).unwrap();
        let matched = inner + outer <= cfg.minimax.total_budget && nominal <= cfg.minimax.total_budget;
        if t.robust.max <= t.nominal.max && matched {
            wins += 1;
        }
        rows.push(format!(
            "s{s}: {:.1}/{:.1} ({} vs {nominal} evals)",
            t.robust.max,
            t.nominal.max,
            inner + outer
        ));
    }
    verdict(
        wins >= 4,
        format!("robust max <= nominal max in {wins}/5 (>=4) [{}]", rows.join("; ")),
    )
}

fn reproducibility() -> Verdict {
    let tmp = tempfile::tempdir().unwrap();
    let mut same = 0;
    let mut total = 0;
    for alg in [
        Algorithm::Baseline,
        Algorithm::PmtoFt,
        Algorithm::Pmto,
        Algorithm::PmtoRt,
    ] {
        let mut traces = Vec::new();
        for copy in 0..2 {
            let mut cfg = ExperimentConfig {
                problem: "sphere-1".into(),
                algorithm: alg,
                trials: 2,
                ..ExperimentConfig::default()
            };
            cfg.run = RunConfig {
                n_init: 20,
                n_tot: 60,
                initial_tasks: 4,
                seed: 7,
                ..RunConfig::default()
            };
            cfg.grid.size = Some(64);
            cfg.output_dir = tmp.path().join(format!("{}-{copy}", alg.name()));
            run_experiment(&cfg, false).unwrap();
            traces.push(
                (0..2)
                    .map(|u| std::fs::read(cfg.output_dir.join(format!("trace_trial{u}.csv"))).unwrap())
                    .collect::<Vec<_>>(),
            );
        }
        total += 1;
        same += (traces[0] == traces[1]) as usize;
    }
    verdict(
        same == total,
        format!("byte-identical trace CSVs for {same}/{total} algorithms over 2 trials"),
    )
}

fn main() -> ExitCode {
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let wanted = |n: usize| selected.is_empty() || selected.contains(&n);
    let mut runs = Runs::default();
    let mut failed = 0;
    let criteria: Vec<(usize, &str)> = vec![
        (1, "GP correctness suite"),
        (2, "information-gain inequality"),
        (3, "EA operator suite"),
        (4, "diversity objective"),
        (5, "benchmark correctness"),
        (6, "desk convergence ordering"),
        (7, "desk online ordering"),
        (8, "task-evolution ablation"),
        (9, "minimax robust design"),
        (10, "reproducibility"),
    ];
    for (n, name) in criteria {
        if !wanted(n) {
            continue;
        }
        let start = Instant::now();
        let v = match n {
            1 => gp_suite(),
            2 => information_gain(),
            3 => ea_operators(),
            4 => diversity(),
            5 => benchmarks(),
            6 => convergence(&mut runs),
            7 => online_ordering(&mut runs),
            8 => ablation(&mut runs),
            9 => minimax(),
            _ => reproducibility(),
        };
        failed += (!v.pass) as usize;
        println!(
            "{} [{n}] {name} ({:.1} s): {}",
            if v.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            v.detail
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
