//! Trains the actor-critic agent and writes the checkpoint, learning curve
//! and log into a run directory.
//!
//! cargo run --release --example train_agent -- [episodes] [seed] [out_dir]

use std::path::PathBuf;

use uav_coverage::config::RunConfig;
use uav_coverage::harness::cmd_train;

fn main() -> uav_coverage::Result<()> {
    let mut args = std::env::args().skip(1);
    let mut config = RunConfig::default();
    if let Some(episodes) = args.next().and_then(|s| s.parse().ok()) {
        config.agent.episodes = episodes;
    }
    config.seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);
    config.out = args.next().map_or_else(|| PathBuf::from("runs/example"), PathBuf::from);

    let report = cmd_train(&config, None)?;
    for p in &report.curve {
        println!(
            "episode {:3}  reward {:9.3}  running mean {:9.3}  mean Q {:8.3}",
            p.episode, p.total_reward, p.running_mean, p.mean_q
        );
    }
    println!("final average reward {:.3}", report.final_mean);
    println!("checkpoint {}", report.checkpoint.display());
    Ok(())
}
