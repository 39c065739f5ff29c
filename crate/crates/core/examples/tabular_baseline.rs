//! Trains the grid Q-learning baseline and evaluates its greedy policy.
//!
//! cargo run --release --example tabular_baseline -- [episodes] [seed]

use uav_coverage::baselines::{tabular_q_train, BaselineConfig};
use uav_coverage::env::{Env, EnvConfig};
use uav_coverage::rollout::{run_episode, Policy};

fn main() -> uav_coverage::Result<()> {
    let mut args = std::env::args().skip(1);
    let mut baseline = BaselineConfig::default();
    if let Some(episodes) = args.next().and_then(|s| s.parse().ok()) {
        baseline.episodes = episodes;
    }
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);
    let env_config = EnvConfig::default();
    let policy = tabular_q_train(&env_config, &baseline, seed)?;
    let mut env = Env::new(env_config)?;
    let record = run_episode(&mut env, &Policy::Tabular(Box::new(policy)), &baseline, seed)?;
    let a = &record.aggregates;
    println!(
        "{} slots, reward {:.3}, energy {:.0} J, fairness {:.3}, efficiency {:.3}",
        record.rows.len(),
        a.total_reward,
        a.total_energy,
        a.fairness,
        a.energy_efficiency
    );
    println!("goal distances {:?}", env.goal_distances());
    Ok(())
}
