use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use linas_cli::commands::{cmd_compare, cmd_mape_study, cmd_scatter, cmd_search, cmd_serve, cmd_spacecheck, MapeOptions};
use linas_cli::config::RunConfig;
use linas_core::SpaceKind;

#[derive(Parser)]
#[command(name = "linas", version, about = "Predictor-guided architecture search experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured search once per seed.
    Search {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated seeds; replaces the config's list.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Aggregate hypervolume curves of several runs.
    Compare {
        /// Run-log CSVs or directories containing them.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Reference point, e.g. `20,200`. Defaults to the space's.
        #[arg(long = "ref", value_delimiter = ',', allow_negative_numbers = true)]
        reference: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        checkpoints: Option<Vec<usize>>,
        #[arg(long, default_value = "comparison")]
        out: PathBuf,
    },
    /// Objective-space scatter of a run log at several evaluation cutoffs.
    Scatter {
        log: PathBuf,
        #[arg(long, value_delimiter = ',')]
        cutoffs: Option<Vec<usize>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Predictor error versus training-set size.
    MapeStudy {
        /// Repeatable; both spaces when omitted.
        #[arg(long = "space")]
        spaces: Vec<String>,
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<usize>>,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long, default_value_t = 500)]
        holdout: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "mape")]
        out: PathBuf,
    },
    /// Print a space's variables and size.
    Spacecheck { space: String },
    /// Serve the synthetic oracle over the stdin/stdout line protocol.
    Serve {
        #[arg(long)]
        space: String,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        noise_seed: u64,
    },
}

fn parse_space(name: &str) -> Result<SpaceKind> {
    SpaceKind::from_str(name).map_err(|e| anyhow::anyhow!("{e}"))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Search { config, seeds, out, workers } => {
            let mut cfg = RunConfig::load(&config)?;
            if let Some(s) = seeds {
                cfg.seeds = s;
            }
            if out.is_some() {
                cfg.output = out;
            }
            if workers.is_some() {
                cfg.workers = workers;
            }
            let outcome = cmd_search(cfg)?;
            println!("wrote {} trial logs to {}", outcome.trial_files.len(), outcome.output.display());
        }
        Command::Compare { inputs, reference, checkpoints, out } => {
            let outcome = cmd_compare(&inputs, reference, checkpoints, &out)?;
            for (alg, agg) in &outcome.curves {
                let last = agg.mean.len() - 1;
                println!(
                    "{alg}: {} trials, HV at {} = {:.4} ± {:.4}",
                    agg.trials, agg.checkpoints[last], agg.mean[last], agg.stderr[last]
                );
            }
            println!("wrote {} and {}", outcome.csv.display(), outcome.svg.display());
        }
        Command::Scatter { log, cutoffs, out } => {
            for f in cmd_scatter(&log, cutoffs, out.as_deref())? {
                println!("wrote {}", f.display());
            }
        }
        Command::MapeStudy { spaces, sizes, trials, holdout, seed, out } => {
            let mut options = MapeOptions { trials, holdout, seed, ..MapeOptions::default() };
            if !spaces.is_empty() {
                options.spaces = spaces.iter().map(|s| parse_space(s)).collect::<Result<_>>()?;
            }
            if let Some(s) = sizes {
                options.sizes = s;
            }
            let outcome = cmd_mape_study(&options, &out)?;
            for (kind, stats) in &outcome.curves {
                for s in stats {
                    println!("{:<12} n={:<5} MAPE {:.3}% ± {:.3}", kind.name(), s.size, s.mean, s.stddev);
                }
            }
            println!("wrote {} and {}", outcome.csv.display(), outcome.svg.display());
        }
        Command::Spacecheck { space } => print!("{}", cmd_spacecheck(&space)?),
        Command::Serve { space, noise, noise_seed } => cmd_serve(parse_space(&space)?, noise, noise_seed).context("serving")?,
    }
    Ok(())
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
