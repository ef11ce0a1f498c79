//! `turbo` — experiment runner for trust-region Bayesian optimization.
//!
//! Exit codes: 0 on success, 2 for configuration/startup errors, 3 for
//! numerical failures during a run.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use turbo_cli::config::{Algorithm, ExperimentConfig, Overrides};
use turbo_cli::experiment::{batch_study, run_experiment, HarnessError};

#[derive(Parser)]
#[command(
    name = "turbo",
    version,
    about = "Trust-region Bayesian optimization experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment (possibly many replicates) and write traces and
    /// a summary to the output directory.
    Run(RunArgs),
    /// Batch-efficiency study: rerun the experiment at several batch
    /// sizes, with budget max(200 q, floor budget) each.
    BatchStudy(BatchStudyArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// Key-value experiment file; flags below override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    objective: Option<String>,
    #[arg(long)]
    dimension: Option<usize>,
    #[arg(long)]
    algorithm: Option<Algorithm>,
    /// Number of trust regions (m).
    #[arg(long)]
    num_regions: Option<usize>,
    /// Batch size (q).
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    max_evaluations: Option<usize>,
    #[arg(long)]
    init_points: Option<usize>,
    #[arg(long)]
    replications: Option<usize>,
    #[arg(long)]
    base_seed: Option<u64>,
    #[arg(long)]
    noise_sigma: Option<f64>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct BatchStudyArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Comma-separated batch sizes, e.g. 1,10,50.
    #[arg(long, value_delimiter = ',', required = true)]
    q_list: Vec<usize>,
    /// Minimum evaluation budget per batch size.
    #[arg(long, default_value_t = 6400)]
    floor_budget: usize,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<ExperimentConfig, String> {
        let overrides = Overrides {
            objective: self.objective.clone(),
            dimension: self.dimension,
            algorithm: self.algorithm,
            num_regions: self.num_regions,
            batch_size: self.batch_size,
            max_evaluations: self.max_evaluations,
            init_points: self.init_points,
            replications: self.replications,
            base_seed: self.base_seed,
            noise_sigma: self.noise_sigma,
            output_dir: self.output_dir.clone(),
        };
        ExperimentConfig::resolve(self.config.as_deref(), &overrides)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => match args.config.resolve() {
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
            Ok(config) => run_experiment(&config).map(|summary| {
                let last = summary.mean_best.last().copied().unwrap_or(f64::NAN);
                let err = summary.stderr_best.last().copied().unwrap_or(f64::NAN);
                println!(
                    "{} replicate(s) done; final best {:.6} +/- {:.6} (stderr); outputs in {}",
                    config.replications,
                    last,
                    err,
                    config.output_dir.display()
                );
            }),
        },
        Command::BatchStudy(args) => match args.config.resolve() {
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
            Ok(config) => batch_study(&config, &args.q_list, args.floor_budget).map(|()| {
                println!(
                    "batch study over q = {:?} done; outputs in {}",
                    args.q_list,
                    config.output_dir.display()
                );
            }),
        },
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(HarnessError::Startup(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(HarnessError::Numerical(m)) => {
            eprintln!("error: numerical failure: {m}");
            ExitCode::from(3)
        }
    }
}
