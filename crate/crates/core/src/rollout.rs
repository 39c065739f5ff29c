//! Uniform episode rollouts for the learned agent and the comparison
//! policies.

use crate::agent::Agent;
use crate::baselines::{random_policy_step, BaselineConfig, TabularPolicy};
use crate::env::Env;
use crate::error::Result;
use crate::metrics::EpisodeRecord;
use crate::rng::{stream, Stream};

/// A controller able to fly a whole episode.
#[derive(Debug, Clone)]
pub enum Policy {
    /// Greedy (noise-free) actor of a trained agent.
    Drl(Box<Agent>),
    /// Uniformly random horizontal moves.
    Random,
    /// Greedy tabular Q-learner.
    Tabular(Box<TabularPolicy>),
}

impl Policy {
    pub fn name(&self) -> &'static str {
        match self {
            Policy::Drl(_) => "drl",
            Policy::Random => "random",
            Policy::Tabular(_) => "tabular",
        }
    }
}

/// Flies one episode from `env.reset(seed)` (or the fixed-altitude variant
/// for the comparison policies) until it terminates.
pub fn run_episode(
    env: &mut Env,
    policy: &Policy,
    baseline: &BaselineConfig,
    seed: u64,
) -> Result<EpisodeRecord> {
    match policy {
        Policy::Drl(agent) => {
            let mut state = env.reset(seed);
            let mut rng = stream(seed, Stream::Noise);
            while !env.is_done() {
                let action = agent.select_action(&state, 0.0, &mut rng)?;
                state = env.step(&action)?.state;
            }
        }
        Policy::Random => {
            env.reset_at_altitude(seed, baseline.altitude);
            let limits = baseline.limits(env.config());
            let mut rng = stream(seed, Stream::Baseline);
            while !env.is_done() {
                let commands = random_policy_step(env, baseline.max_move, &mut rng);
                env.step_commands(&commands, &limits)?;
            }
        }
        Policy::Tabular(tabular) => {
            env.reset_at_altitude(seed, tabular.config.altitude);
            let limits = tabular.config.limits(env.config());
            while !env.is_done() {
                let commands = tabular.act(env);
                env.step_commands(&commands, &limits)?;
            }
        }
    }
    Ok(env.record().clone())
}

