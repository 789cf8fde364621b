//! Experiment runner for the driftstream toolkit.
//!
//! Subcommands: `gen` (write a dataset), `run` (one configured experiment,
//! fanning out over a delay list), `sweep` (delay x seed grid in a worker
//! pool), `report` (compare run summaries).
//!
//! Exit codes: 0 success, 1 runtime failure, 2 config/schema error.

mod config;
mod report;
mod runner;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use config::{DelaySpec, ExperimentConfig};
use driftstream::generate::derive_seed;

#[derive(Parser)]
#[command(name = "driftstream", version, about = "Drift-aware stream-learning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the configured dataset and write it as JSONL.
    Gen {
        /// Experiment config (JSON).
        #[arg(short, long)]
        config: PathBuf,
        /// Output file (default: <output_dir>/dataset.jsonl).
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Run the configured experiment (one run per configured delay).
    Run {
        #[arg(short, long)]
        config: PathBuf,
        /// Also write predictions.jsonl per run.
        #[arg(long)]
        log_predictions: bool,
    },
    /// Run a (delay x seed) grid of experiments in a worker pool.
    Sweep {
        #[arg(short, long)]
        config: PathBuf,
        /// Number of consecutive seeds, starting at the config's seed.
        #[arg(long, default_value_t = 5)]
        n_seeds: u64,
        /// Worker pool size (default: CPU count).
        #[arg(short, long)]
        jobs: Option<usize>,
    },
    /// Compare run summaries (markdown to stdout, optional files).
    Report {
        /// Run directories (each holding a summary.json).
        #[arg(required = true)]
        run_dirs: Vec<PathBuf>,
        /// Directory to write report.md and report.csv into.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(err)) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

enum Failure {
    Config(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(err: anyhow::Error) -> Self {
        Failure::Runtime(err)
    }
}

fn load_config(path: &std::path::Path) -> Result<ExperimentConfig, Failure> {
    ExperimentConfig::load(path).map_err(Failure::Config)
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Gen { config, out } => {
            let config = load_config(&config)?;
            runner::cmd_gen(&config, out.as_deref())?;
            Ok(())
        }
        Command::Run { config, log_predictions } => {
            let config = load_config(&config)?;
            runner::cmd_run(&config, log_predictions)?;
            Ok(())
        }
        Command::Sweep { config, n_seeds, jobs } => {
            let config = load_config(&config)?;
            if n_seeds == 0 {
                return Err(Failure::Config("n_seeds must be positive".into()));
            }
            cmd_sweep(&config, n_seeds, jobs)?;
            Ok(())
        }
        Command::Report { run_dirs, out } => {
            report::cmd_report(&run_dirs, out.as_deref())?;
            Ok(())
        }
    }
}

/// Fan a (delay x seed) grid out over a worker pool; every element is an
/// independent run writing into its own subdirectory, merged at the end
/// into sweep.csv.
fn cmd_sweep(base: &ExperimentConfig, n_seeds: u64, jobs: Option<usize>) -> anyhow::Result<()> {
    if let Some(jobs) = jobs {
        rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global().ok();
    }
    let delays = base.delay_days.values();
    let grid: Vec<(i64, u64)> = delays
        .iter()
        .flat_map(|&d| (0..n_seeds).map(move |i| (d, i)))
        .collect();

    let results: Vec<anyhow::Result<runner::RunSummary>> = grid
        .par_iter()
        .map(|&(delay, seed_offset)| {
            let seed = base.seed + seed_offset;
            let mut config = base.clone();
            config.seed = seed;
            config.delay_days = DelaySpec::One(delay);
            // Generated datasets follow the element seed so seeds are
            // independent end to end.
            if let config::DatasetSpec::Generator(g) = &mut config.dataset {
                g.seed = derive_seed(seed, "dataset");
            }
            if let config::DatasetSpec::Traces(t) = &mut config.dataset {
                t.seed = derive_seed(seed, "dataset");
            }
            let dir = base.output_dir.join(format!("delay_{delay}_seed_{seed}"));
            config.output_dir = dir.clone();
            let dataset = runner::materialize_dataset(&config)?;
            match &dataset {
                runner::Dataset::Stream { stream, sha256 } => runner::run_prequential_experiment(
                    &config, stream, sha256, delay, &dir, false,
                ),
                runner::Dataset::Traces { .. } => {
                    anyhow::bail!("sweep applies to record streams; trace runs have their own proportion grid")
                }
            }
        })
        .collect();

    let mut csv = String::from("delay_days,seed,aut_f1,aut_precision,final_f1,final_precision,drifts\n");
    let mut ok = 0usize;
    for result in results {
        let s = result?;
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            s.delay_days,
            s.seed,
            s.aut_f1,
            s.aut_precision,
            s.r#final.f1,
            s.r#final.precision,
            s.drifts.len()
        ));
        ok += 1;
    }
    std::fs::create_dir_all(&base.output_dir)?;
    let path = base.output_dir.join("sweep.csv");
    std::fs::write(&path, csv)?;
    println!("{ok} runs -> {}", path.display());
    Ok(())
}
