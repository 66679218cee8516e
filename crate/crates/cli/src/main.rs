use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod envs;
mod plot;

/// Train and evaluate a cable-driven soft tripod that learns to walk to goals.
#[derive(Debug, Parser)]
#[command(name = "tripod", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Run configuration (JSON). Built-in defaults are used when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Master seed for every random stream.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, env = "TRIPOD_OUT_DIR", default_value = "runs/latest")]
    pub out: PathBuf,
    /// Worker threads (0 = one per logical core).
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    /// Override a config field, e.g. `--set ppo.learning_rate=1e-4`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a policy with PPO.
    Train {
        #[arg(long)]
        total_steps: Option<u64>,
        #[arg(long)]
        n_envs: Option<usize>,
        /// Steps per environment per rollout.
        #[arg(long)]
        horizon: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Run the goal-reaching benchmark from the origin.
    Eval {
        #[arg(long, required_unless_present = "random")]
        checkpoint: Option<PathBuf>,
        /// Evaluate the frozen, randomly initialized baseline policy instead.
        #[arg(long, conflicts_with = "checkpoint")]
        random: bool,
        #[arg(long)]
        n_goals: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Follow an arc of waypoints.
    Trajectory {
        #[arg(long, required_unless_present = "random")]
        checkpoint: Option<PathBuf>,
        #[arg(long, conflicts_with = "checkpoint")]
        random: bool,
        #[arg(long)]
        arc_degrees: Option<f64>,
        #[arg(long)]
        waypoints: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Sweep each cable of a single fixed leg and record the tip.
    DemoLeg {
        #[command(flatten)]
        common: Common,
    },
    /// Render SVG figures from the data files in the output directory.
    Plot {
        #[command(flatten)]
        common: Common,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train {
            total_steps,
            n_envs,
            horizon,
            common,
        } => commands::train(common, total_steps, n_envs, horizon),
        Command::Eval {
            checkpoint,
            random,
            n_goals,
            common,
        } => commands::eval(common, checkpoint, random, n_goals),
        Command::Trajectory {
            checkpoint,
            random,
            arc_degrees,
            waypoints,
            common,
        } => commands::trajectory(common, checkpoint, random, arc_degrees, waypoints),
        Command::DemoLeg { common } => commands::demo_leg(common),
        Command::Plot { common } => commands::plot(common),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<config::MissingConfig>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
