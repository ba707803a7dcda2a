//! Command-line front end for parametric multi-task optimization experiments.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pmto::experiment::{evaluate_saved, run_experiment, run_minimax, ExperimentConfig};
use pmto::problems::REGISTRY;

#[derive(Parser)]
#[command(name = "pmto", version, about = "Parametric multi-task optimization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run trials of one algorithm on one problem and score the task models.
    Run(Common),
    /// Robust truss design: minimax PMTO against the error-free optimum.
    Minimax(Common),
    /// Re-score a saved task model on the configured grid.
    Evaluate {
        /// Task model JSON written by `run`.
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// List registered problems.
    ListProblems,
}

#[derive(Args)]
struct Common {
    /// JSON config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dotted override, e.g. `--set run.n_tot=400`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Base seed; trial `u` uses `seed + u`.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of trials.
    #[arg(long)]
    trials: Option<usize>,
    /// Overwrite a non-empty output directory.
    #[arg(long)]
    force: bool,
}

impl Common {
    fn config(&self) -> pmto::Result<ExperimentConfig> {
        let mut sets = self.set.clone();
        if let Some(s) = self.seed {
            sets.push(format!("run.seed={s}"));
        }
        if let Some(u) = self.trials {
            sets.push(format!("trials={u}"));
        }
        if let Some(o) = &self.out {
            sets.push(format!(
                "output_dir={}",
                serde_json::Value::String(o.display().to_string())
            ));
        }
        ExperimentConfig::load(self.config.as_deref(), &sets)
    }
}

fn execute(cli: Cli) -> pmto::Result<()> {
    match cli.command {
        Command::Run(c) => {
            let cfg = c.config()?;
            let summary = run_experiment(&cfg, c.force)?;
            for (a, (m, s)) in summary
                .report
                .alphas
                .iter()
                .zip(summary.report.mean.iter().zip(&summary.report.std))
            {
                println!("P_{a:.2} mean {m:.6e} std {s:.6e}");
            }
            println!("wrote {}", summary.output_dir.display());
        }
        Command::Minimax(c) => {
            let cfg = c.config()?;
            for (u, t) in run_minimax(&cfg, c.force)?.iter().enumerate() {
                println!(
                    "trial {u}: robust max {:.6e} at {:?}; nominal max {:.6e} at {:?}",
                    t.robust.max, t.robust_design, t.nominal.max, t.nominal_design
                );
            }
            println!("wrote {}", cfg.output_dir.display());
        }
        Command::Evaluate { model, common } => {
            let cfg = common.config()?;
            let report = evaluate_saved(&model, &cfg, common.force)?;
            for (a, m) in report.alphas.iter().zip(&report.mean) {
                println!("P_{a:.2} {m:.6e}");
            }
            println!("wrote {}", cfg.output_dir.display());
        }
        Command::ListProblems => {
            for (name, about) in REGISTRY {
                println!("{name:<15} {about}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
