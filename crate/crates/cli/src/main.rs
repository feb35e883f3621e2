//! `oco-queue`: run the data-center experiment, verify the per-trajectory
//! inequalities and statistical bounds, study convergence rates, and write
//! synthetic price traces.
//!
//! Exit codes: 0 success, 1 config or runtime error, 2 a deterministic
//! inequality failed, 3 a statistical threshold failed.

mod config;
mod convergence;
mod gen_trace;
mod output;
mod run;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use oco_queue::datacenter::Policy;

use config::RunConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    DeterministicFailure,
    StatisticalFailure,
}

impl Outcome {
    fn code(self) -> u8 {
        match self {
            Outcome::Ok => 0,
            Outcome::DeterministicFailure => 2,
            Outcome::StatisticalFailure => 3,
        }
    }
}

#[derive(Parser)]
#[command(name = "oco-queue", version, about = "Online convex optimization with stochastic constraints")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML config file; every key is optional.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed, overriding the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, env = "OCO_QUEUE_OUT", default_value = "out")]
    out: PathBuf,
    /// Worker threads for seed sweeps; all logical cores by default.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the data-center experiment and write per-policy CSV series.
    Run {
        #[command(flatten)]
        common: Common,
        /// Comma-separated policies.
        #[arg(long, value_delimiter = ',')]
        policy: Vec<Policy>,
        #[arg(long)]
        horizon: Option<usize>,
    },
    /// Check the per-trajectory inequalities and statistical bounds.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Horizon of every verified instance.
        #[arg(long)]
        horizon: Option<usize>,
    },
    /// Fit log-log slopes of regret and violation over a horizon grid.
    Convergence {
        #[command(flatten)]
        common: Common,
    },
    /// Write a synthetic price trace.
    GenTrace {
        #[command(flatten)]
        common: Common,
        /// Number of slots.
        #[arg(long)]
        horizon: Option<usize>,
    },
}

fn prepare(common: &Common) -> Result<RunConfig> {
    if let Some(k) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .context("cannot configure worker threads")?;
    }
    RunConfig::load(common.config.as_deref())
}

fn dispatch(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Run {
            common,
            policy,
            horizon,
        } => {
            let mut config = prepare(&common)?;
            if let Some(seed) = common.seed {
                config.experiment.seed = seed;
            }
            if let Some(h) = horizon {
                config.experiment.horizon = h;
            }
            if !policy.is_empty() {
                config.experiment.policies = policy;
            }
            run::cmd_run(&config, &common.out)
        }
        Command::Verify { common, horizon } => {
            let mut config = prepare(&common)?;
            if let Some(seed) = common.seed {
                config.verify.first_seed = seed;
            }
            if let Some(h) = horizon {
                config.verify.instances.iter_mut().for_each(|i| i.horizon = Some(h));
            }
            verify::cmd_verify(&config, &common.out)
        }
        Command::Convergence { common } => {
            let mut config = prepare(&common)?;
            if let Some(seed) = common.seed {
                config.convergence.first_seed = seed;
            }
            convergence::cmd_convergence(&config, &common.out)
        }
        Command::GenTrace { common, horizon } => {
            let mut config = prepare(&common)?;
            if let Some(seed) = common.seed {
                config.gen_trace.seed = seed;
            }
            if let Some(h) = horizon {
                config.gen_trace.slots = h;
            }
            gen_trace::cmd_gen_trace(&config, &common.out)
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(outcome) => ExitCode::from(outcome.code()),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
