use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use uav_coverage::config::RunConfig;
use uav_coverage::harness;

#[derive(Parser)]
#[command(version, about = "Train, evaluate and compare UAV coverage controllers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the actor-critic agent and write a checkpoint and learning curve.
    Train(Common),
    /// Fly one greedy episode with a checkpoint and write its trace.
    Eval(Common),
    /// Compare the checkpoint against the random and tabular baselines.
    Compare(Common),
    /// Tabulate pathloss and throughput over distance and elevation.
    ChannelTable(Common),
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Checkpoint to write (train) or read (eval, compare).
    #[arg(long)]
    checkpoint: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> uav_coverage::Result<RunConfig> {
        let mut config = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(out) = &self.out {
            config.out = out.clone();
        }
        if config.out.as_os_str().is_empty() {
            config.out = PathBuf::from(".");
        }
        Ok(config)
    }

    fn checkpoint(&self, config: &RunConfig) -> PathBuf {
        self.checkpoint
            .clone()
            .unwrap_or_else(|| harness::default_checkpoint(config))
    }
}

fn run(cli: Cli) -> uav_coverage::Result<()> {
    match cli.command {
        Command::Train(c) => {
            let config = c.load()?;
            let report = harness::cmd_train(&config, Some(&c.checkpoint(&config)))?;
            println!(
                "trained {} episodes, final average reward {:.3}; checkpoint {}",
                report.curve.len(),
                report.final_mean,
                report.checkpoint.display()
            );
        }
        Command::Eval(c) => {
            let config = c.load()?;
            let (path, record) = harness::cmd_eval(&config, &c.checkpoint(&config))?;
            let a = &record.aggregates;
            println!(
                "{} slots, reward {:.3}, fairness {:.3}, energy efficiency {:.3}; trace {}",
                record.rows.len(),
                a.total_reward,
                a.fairness,
                a.energy_efficiency,
                path.display()
            );
        }
        Command::Compare(c) => {
            let config = c.load()?;
            let (path, rows) = harness::cmd_compare(&config, &c.checkpoint(&config))?;
            println!("{} comparison rows written to {}", rows.len(), path.display());
        }
        Command::ChannelTable(c) => {
            let config = c.load()?;
            let path = harness::cmd_channel_table(&config)?;
            println!("channel table written to {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let message = e.to_string();
            eprintln!("error: {}", message.lines().collect::<Vec<_>>().join(" "));
            ExitCode::FAILURE
        }
    }
}
