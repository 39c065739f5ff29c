//! Trains one agent and one tabular learner per seed, then tabulates energy
//! efficiency and fairness of all three policies across covering ranges.
//!
//! cargo run --release --example compare_policies -- [episodes] [n_seeds]

use uav_coverage::agent::train;
use uav_coverage::baselines::{tabular_q_train, BaselineConfig};
use uav_coverage::env::EnvConfig;
use uav_coverage::metrics::{compare_policies, summarize, PolicySet};
use uav_coverage::rollout::Policy;

fn main() -> uav_coverage::Result<()> {
    let mut args = std::env::args().skip(1);
    let episodes = args.next().and_then(|s| s.parse().ok()).unwrap_or(10);
    let n_seeds: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(2);
    let seeds: Vec<u64> = (1..=n_seeds).collect();

    let env_config = EnvConfig::default();
    let baseline = BaselineConfig::default();
    let mut agent_config = uav_coverage::agent::AgentConfig::default();
    agent_config.episodes = episodes;

    let mut drl = Vec::new();
    let mut tabular = Vec::new();
    for &seed in &seeds {
        drl.push(Policy::Drl(Box::new(train(&env_config, &agent_config, seed)?.agent)));
        tabular.push(Policy::Tabular(Box::new(tabular_q_train(&env_config, &baseline, seed)?)));
    }
    let sets = vec![
        PolicySet { label: "drl".into(), per_seed: drl },
        PolicySet { label: "random".into(), per_seed: vec![Policy::Random; seeds.len()] },
        PolicySet { label: "tabular".into(), per_seed: tabular },
    ];
    let ranges = [100.0, 200.0, 250.0, 300.0, 400.0];
    let rows = compare_policies(&env_config, &baseline, &sets, &ranges, &seeds)?;
    println!("{:>8} {:>7} {:>16} {:>16}", "policy", "range", "efficiency", "fairness");
    for s in summarize(&rows) {
        println!(
            "{:>8} {:>7.0} {:>8.3} ± {:<6.3} {:>8.3} ± {:<6.3}",
            s.policy, s.range_m, s.ee_mean, s.ee_std, s.fairness_mean, s.fairness_std
        );
    }
    Ok(())
}
