//! Flies one greedy episode with a checkpoint and prints the per-UAV
//! trajectory summary. Trains a short run first when no checkpoint exists.
//!
//! cargo run --release --example eval_trace -- [checkpoint]

use std::path::PathBuf;

use uav_coverage::config::RunConfig;
use uav_coverage::harness::{cmd_eval, cmd_train, default_checkpoint};

fn main() -> uav_coverage::Result<()> {
    let mut config = RunConfig::default();
    config.out = PathBuf::from("runs/example");
    let checkpoint = std::env::args()
        .nth(1)
        .map_or_else(|| default_checkpoint(&config), PathBuf::from);
    if !checkpoint.exists() {
        config.agent.episodes = 5;
        cmd_train(&config, Some(&checkpoint))?;
    }
    let (path, record) = cmd_eval(&config, &checkpoint)?;
    for row in record.rows.iter().step_by(10) {
        let uavs: Vec<String> = row
            .uavs
            .iter()
            .map(|u| format!("({:6.1},{:6.1},{:5.1}) hdg {:5.2}", u.x, u.y, u.z, u.heading))
            .collect();
        println!("t={:2} {}", row.t, uavs.join("  "));
    }
    let a = &record.aggregates;
    println!(
        "reward {:.3}, fairness {:.3}, efficiency {:.3}; trace written to {}",
        a.total_reward,
        a.fairness,
        a.energy_efficiency,
        path.display()
    );
    Ok(())
}
