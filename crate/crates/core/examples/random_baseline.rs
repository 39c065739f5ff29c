//! Runs the random-move baseline for a few seeds and reports fairness and
//! energy efficiency.
//!
//! cargo run --example random_baseline

use uav_coverage::baselines::BaselineConfig;
use uav_coverage::env::{Env, EnvConfig};
use uav_coverage::rollout::{run_episode, Policy};

fn main() -> uav_coverage::Result<()> {
    let baseline = BaselineConfig::default();
    let mut env = Env::new(EnvConfig::default())?;
    for seed in 1..=5 {
        let record = run_episode(&mut env, &Policy::Random, &baseline, seed)?;
        let a = &record.aggregates;
        println!(
            "seed {seed}: {} slots, energy {:.0} J, fairness {:.3}, efficiency {:.3}",
            record.rows.len(),
            a.total_energy,
            a.fairness,
            a.energy_efficiency
        );
    }
    Ok(())
}
