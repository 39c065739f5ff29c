//! Deterministic actor-critic learner.
//!
//! The battery features of the state are first widened by a small trainable
//! "spread" stage so that they are not drowned out by the many positional
//! features; the widened features are concatenated after the remaining raw
//! state entries to form the actor input. The critic sees the raw state
//! followed by the action.

mod replay;

pub use replay::ReplayBuffer;

use ndarray::{concatenate, s, Array1, Array2, ArrayView2, Axis};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::env::{energy_indices, ActionVector, Env, EnvConfig, StateVector, Transition};
use crate::error::{config_err, Error, Result};
use crate::nn::{
    saturation_penalty, Activation, DenseNetwork, ForwardCache, GradientTape, Optimizer,
    OptimizerKind,
};
use crate::rng::{child_seed, stream, Rng, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentConfig {
    /// Discount factor.
    pub gamma: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    /// Target-network tracking rate.
    pub tau: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    /// Exploration noise σ in the first episode; decays linearly to
    /// `noise_sigma_end` in the last one.
    pub noise_sigma_start: f64,
    pub noise_sigma_end: f64,
    pub episodes: usize,
    /// Hidden widths shared by actor and critic.
    pub hidden_layers: Vec<usize>,
    /// Width of the battery spread stage; 0 feeds the raw state to the actor.
    pub spread_width: usize,
    pub saturation_threshold: f64,
    pub saturation_coef: f64,
    pub optimizer: OptimizerKind,
    /// Global gradient-norm cap per network; 0 disables clipping.
    pub grad_clip: f64,
    /// Gradient steps per environment step once the buffer holds a batch.
    pub updates_per_step: usize,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            actor_lr: 0.05,
            critic_lr: 0.05,
            tau: 0.005,
            batch_size: 64,
            buffer_capacity: 50_000,
            noise_sigma_start: 0.2,
            noise_sigma_end: 0.02,
            episodes: 50,
            hidden_layers: vec![276; 4],
            spread_width: 8,
            saturation_threshold: 3.0,
            saturation_coef: 1e-3,
            optimizer: OptimizerKind::Sgd,
            grad_clip: 1.0,
            updates_per_step: 1,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(config_err("agent.gamma", "must lie in (0, 1]"));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(config_err("agent.tau", "must lie in (0, 1]"));
        }
        for (key, lr) in [("agent.actor_lr", self.actor_lr), ("agent.critic_lr", self.critic_lr)] {
            if !(lr > 0.0 && lr.is_finite()) {
                return Err(config_err(key, "must be finite and > 0"));
            }
        }
        if self.batch_size == 0 {
            return Err(config_err("agent.batch_size", "must be > 0"));
        }
        if self.batch_size > self.buffer_capacity {
            return Err(config_err(
                "agent.batch_size",
                format!("exceeds buffer_capacity ({})", self.buffer_capacity),
            ));
        }
        if !(self.noise_sigma_start >= 0.0 && self.noise_sigma_end >= 0.0) {
            return Err(config_err("agent.noise_sigma_start", "noise scales must be >= 0"));
        }
        if self.hidden_layers.contains(&0) {
            return Err(config_err("agent.hidden_layers", "widths must be > 0"));
        }
        if !(self.saturation_threshold >= 0.0 && self.saturation_coef >= 0.0) {
            return Err(config_err("agent.saturation_threshold", "must be >= 0"));
        }
        if !(self.grad_clip >= 0.0) {
            return Err(config_err("agent.grad_clip", "must be >= 0"));
        }
        if self.updates_per_step == 0 {
            return Err(config_err("agent.updates_per_step", "must be > 0"));
        }
        Ok(())
    }

    /// Exploration σ for a zero-based episode index.
    pub fn noise_sigma(&self, episode: usize) -> f64 {
        if self.episodes <= 1 {
            return self.noise_sigma_start;
        }
        let frac = episode as f64 / (self.episodes - 1) as f64;
        self.noise_sigma_start + (self.noise_sigma_end - self.noise_sigma_start) * frac
    }
}

/// A sampled mini-batch laid out as matrices.
#[derive(Debug, Clone)]
pub struct Batch {
    pub states: Array2<f64>,
    pub actions: Array2<f64>,
    pub rewards: Array1<f64>,
    pub next_states: Array2<f64>,
    pub dones: Array1<f64>,
}

impl Batch {
    pub fn from_transitions(items: &[&Transition]) -> Self {
        let rows = |f: &dyn Fn(&Transition) -> &[f64]| {
            let width = f(items[0]).len();
            let flat: Vec<f64> = items.iter().flat_map(|t| f(t).iter().copied()).collect();
            Array2::from_shape_vec((items.len(), width), flat).expect("uniform widths")
        };
        Self {
            states: rows(&|t| t.state.as_slice()),
            actions: rows(&|t| t.action.as_slice()),
            rewards: items.iter().map(|t| t.reward).collect(),
            next_states: rows(&|t| t.next_state.as_slice()),
            dones: items.iter().map(|t| if t.done { 1.0 } else { 0.0 }).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }
}

/// Splits states into raw columns and battery columns.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSplit {
    pub energy: Vec<usize>,
    pub raw: Vec<usize>,
}

impl StateSplit {
    pub fn new(state_len: usize, energy: Vec<usize>) -> Self {
        let raw = (0..state_len).filter(|i| !energy.contains(i)).collect();
        Self { energy, raw }
    }

    fn select(states: ArrayView2<f64>, cols: &[usize]) -> Array2<f64> {
        states.select(Axis(1), cols)
    }
}

/// Online and target networks plus their optimizers.
#[derive(Debug, Clone)]
pub struct Agent {
    config: AgentConfig,
    split: StateSplit,
    pub actor: DenseNetwork,
    pub actor_target: DenseNetwork,
    pub critic: DenseNetwork,
    pub critic_target: DenseNetwork,
    pub spread: Option<DenseNetwork>,
    pub spread_target: Option<DenseNetwork>,
    actor_opt: Optimizer,
    critic_opt: Optimizer,
    spread_opt: Optimizer,
}

/// Forward state of the actor path, kept for the reverse pass.
struct ActorPass {
    spread: Option<ForwardCache>,
    actor: ForwardCache,
}

impl Agent {
    pub fn new(
        state_len: usize,
        action_len: usize,
        energy: Vec<usize>,
        config: AgentConfig,
        rng: &mut Rng,
    ) -> Result<Self> {
        config.validate()?;
        let split = StateSplit::new(state_len, energy);
        let spread = (config.spread_width > 0).then(|| {
            DenseNetwork::new(
                &[split.energy.len(), config.spread_width],
                Activation::Relu,
                Activation::Sigmoid,
                rng,
            )
        });
        let actor_in = if spread.is_some() {
            split.raw.len() + config.spread_width
        } else {
            state_len
        };
        let sizes = |input: usize, output: usize| {
            let mut s = vec![input];
            s.extend(&config.hidden_layers);
            s.push(output);
            s
        };
        let actor = DenseNetwork::new(
            &sizes(actor_in, action_len),
            Activation::Relu,
            Activation::Sigmoid,
            rng,
        );
        let critic = DenseNetwork::new(
            &sizes(state_len + action_len, 1),
            Activation::Relu,
            Activation::Identity,
            rng,
        );
        Ok(Self::assemble(config, split, actor, critic, spread))
    }

    fn assemble(
        config: AgentConfig,
        split: StateSplit,
        actor: DenseNetwork,
        critic: DenseNetwork,
        spread: Option<DenseNetwork>,
    ) -> Self {
        Self {
            actor_opt: Optimizer::new(config.optimizer, config.actor_lr),
            critic_opt: Optimizer::new(config.optimizer, config.critic_lr),
            spread_opt: Optimizer::new(config.optimizer, config.actor_lr),
            actor_target: actor.clone(),
            critic_target: critic.clone(),
            spread_target: spread.clone(),
            actor,
            critic,
            spread,
            split,
            config,
        }
    }

    /// Agent rebuilt from checkpointed networks; targets start as copies.
    pub fn from_networks(
        state_len: usize,
        energy: Vec<usize>,
        config: AgentConfig,
        actor: DenseNetwork,
        critic: DenseNetwork,
        spread: Option<DenseNetwork>,
    ) -> Result<Self> {
        let split = StateSplit::new(state_len, energy);
        let actor_in = match &spread {
            Some(s) => {
                if s.input_size() != split.energy.len() {
                    return Err(Error::ShapeMismatch {
                        expected: format!("spread input width {}", split.energy.len()),
                        found: format!("{}", s.input_size()),
                    });
                }
                split.raw.len() + s.output_size()
            }
            None => state_len,
        };
        if actor.input_size() != actor_in {
            return Err(Error::ShapeMismatch {
                expected: format!("actor input width {actor_in}"),
                found: format!("{}", actor.input_size()),
            });
        }
        if critic.input_size() != state_len + actor.output_size() || critic.output_size() != 1 {
            return Err(Error::ShapeMismatch {
                expected: format!("critic {} -> 1", state_len + actor.output_size()),
                found: format!("critic {} -> {}", critic.input_size(), critic.output_size()),
            });
        }
        Ok(Self::assemble(config, split, actor, critic, spread))
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    pub fn state_split(&self) -> &StateSplit {
        &self.split
    }

    pub fn action_len(&self) -> usize {
        self.actor.output_size()
    }

    fn actor_input(&self, spread: Option<&DenseNetwork>, states: ArrayView2<f64>) -> Result<Array2<f64>> {
        match spread {
            Some(net) => {
                let raw = StateSplit::select(states, &self.split.raw);
                let wide = net.predict(StateSplit::select(states, &self.split.energy).view())?;
                Ok(concatenate![Axis(1), raw, wide])
            }
            None => Ok(states.to_owned()),
        }
    }

    fn actor_forward(&self, states: ArrayView2<f64>) -> Result<ActorPass> {
        let (input, spread) = match &self.spread {
            Some(net) => {
                let raw = StateSplit::select(states, &self.split.raw);
                let cache = net.forward(StateSplit::select(states, &self.split.energy).view())?;
                (concatenate![Axis(1), raw, cache.output().view()], Some(cache))
            }
            None => (states.to_owned(), None),
        };
        Ok(ActorPass {
            spread,
            actor: self.actor.forward(input.view())?,
        })
    }

    /// Deterministic policy output for a batch of states.
    pub fn policy(&self, states: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.actor.predict(self.actor_input(self.spread.as_ref(), states)?.view())
    }

    fn target_policy(&self, states: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.actor_target
            .predict(self.actor_input(self.spread_target.as_ref(), states)?.view())
    }

    /// Actor output for one state, optionally perturbed by Gaussian noise of
    /// scale `sigma` and clipped back into `[0, 1]`.
    pub fn select_action(&self, state: &StateVector, sigma: f64, rng: &mut Rng) -> Result<ActionVector> {
        let s = ndarray::ArrayView2::from_shape((1, state.0.len()), &state.0)
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        let mut a = self.policy(s)?.row(0).to_vec();
        if sigma > 0.0 {
            let noise = Normal::new(0.0, sigma).map_err(|e| Error::InvalidArgument(e.to_string()))?;
            for v in &mut a {
                *v = (*v + noise.sample(rng)).clamp(0.0, 1.0);
            }
        }
        Ok(ActionVector(a))
    }

    /// Critic estimate for a batch of state-action pairs.
    pub fn q_values(&self, states: ArrayView2<f64>, actions: ArrayView2<f64>) -> Result<Array1<f64>> {
        Ok(self
            .critic
            .predict(concatenate![Axis(1), states, actions].view())?
            .column(0)
            .to_owned())
    }

    /// Bootstrapped targets `r + γ·(1 − done)·Q'(s', μ'(s'))`.
    pub fn td_targets(&self, batch: &Batch) -> Result<Array1<f64>> {
        let next_actions = self.target_policy(batch.next_states.view())?;
        let q_next = self
            .critic_target
            .predict(concatenate![Axis(1), batch.next_states.view(), next_actions.view()].view())?;
        let gamma = self.config.gamma;
        Ok(&batch.rewards + &(q_next.column(0).to_owned() * (1.0 - &batch.dones) * gamma))
    }

    fn clip(&self, tape: &mut GradientTape) {
        if self.config.grad_clip > 0.0 {
            tape.clip_global_norm(self.config.grad_clip);
        }
    }

    /// One regression step of the critic toward the TD targets. Returns the
    /// mean squared error before the step.
    pub fn critic_update(&mut self, batch: &Batch) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::InvalidArgument("empty batch".into()));
        }
        let targets = self.td_targets(batch)?;
        let input = concatenate![Axis(1), batch.states.view(), batch.actions.view()];
        let cache = self.critic.forward(input.view())?;
        let err = &cache.output().column(0) - &targets;
        let n = batch.len() as f64;
        let loss = err.mapv(|e| e * e).sum() / n;
        let grad = (err * (2.0 / n)).insert_axis(Axis(1));
        let mut tape = self.critic.backward(&cache, grad.view())?;
        self.clip(&mut tape);
        self.critic_opt.apply(&mut self.critic, &tape)?;
        Ok(loss)
    }

    /// Gradient of `mean Q(s, μ(s)) − penalty/B` with respect to the actor and
    /// spread parameters, returned as descent directions (negated), together
    /// with the objective value.
    pub fn actor_gradients(&self, states: ArrayView2<f64>) -> Result<(f64, GradientTape, Option<GradientTape>)> {
        let n = states.nrows() as f64;
        let pass = self.actor_forward(states)?;
        let actions = pass.actor.output();
        let critic_in = concatenate![Axis(1), states, actions.view()];
        let critic_cache = self.critic.forward(critic_in.view())?;
        let mean_q = critic_cache.output().sum() / n;
        let dq = Array2::from_elem((states.nrows(), 1), -1.0 / n);
        let critic_tape = self.critic.backward(&critic_cache, dq.view())?;
        let state_len = states.ncols();
        let d_action = critic_tape.input.slice(s![.., state_len..]).to_owned();

        let (penalty, mut d_pre) = saturation_penalty(
            &pass.actor,
            self.config.saturation_threshold,
            self.config.saturation_coef,
        );
        d_pre.mapv_inplace(|v| v / n);
        let actor_tape =
            self.actor
                .backward_with_pre_activation(&pass.actor, d_action.view(), Some(d_pre.view()))?;
        let spread_tape = match (&self.spread, &pass.spread) {
            (Some(net), Some(cache)) => {
                let raw = self.split.raw.len();
                let d_wide = actor_tape.input.slice(s![.., raw..]).to_owned();
                Some(net.backward(cache, d_wide.view())?)
            }
            _ => None,
        };
        Ok((mean_q - penalty / n, actor_tape, spread_tape))
    }

    /// One ascent step of the policy on the critic's estimate. Returns the
    /// objective before the step.
    pub fn actor_update(&mut self, batch: &Batch) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::InvalidArgument("empty batch".into()));
        }
        let (objective, mut actor_tape, spread_tape) = self.actor_gradients(batch.states.view())?;
        self.clip(&mut actor_tape);
        self.actor_opt.apply(&mut self.actor, &actor_tape)?;
        if let (Some(net), Some(mut tape)) = (self.spread.as_mut(), spread_tape) {
            if self.config.grad_clip > 0.0 {
                tape.clip_global_norm(self.config.grad_clip);
            }
            self.spread_opt.apply(net, &tape)?;
        }
        Ok(objective)
    }

    /// Moves every target network toward its online counterpart.
    pub fn soft_update_targets(&mut self) -> Result<()> {
        let tau = self.config.tau;
        self.actor_target.soft_update(&self.actor, tau)?;
        self.critic_target.soft_update(&self.critic, tau)?;
        if let (Some(t), Some(o)) = (self.spread_target.as_mut(), self.spread.as_ref()) {
            t.soft_update(o, tau)?;
        }
        Ok(())
    }

    /// Networks in checkpoint order.
    pub fn checkpoint_networks(&self) -> Vec<(&'static str, &DenseNetwork)> {
        let mut out = vec![("actor", &self.actor), ("critic", &self.critic)];
        if let Some(s) = &self.spread {
            out.push(("spread", s));
        }
        out
    }
}

/// One point of the learning curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub episode: usize,
    pub total_reward: f64,
    /// Mean total reward over the last (up to) ten episodes.
    pub running_mean: f64,
    /// Mean critic estimate of the actions taken during the episode.
    pub mean_q: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub agent: Agent,
    pub curve: Vec<CurvePoint>,
}

pub const RUNNING_MEAN_WINDOW: usize = 10;

/// Runs the episodic training loop. Fully determined by `seed`.
pub fn train(env_config: &EnvConfig, config: &AgentConfig, seed: u64) -> Result<TrainOutcome> {
    train_with(env_config, config, seed, |_| {})
}

/// [`train`] with a callback invoked after every episode.
pub fn train_with(
    env_config: &EnvConfig,
    config: &AgentConfig,
    seed: u64,
    mut on_episode: impl FnMut(&CurvePoint),
) -> Result<TrainOutcome> {
    let mut env = Env::new(env_config.clone())?;
    let mut agent_rng = stream(seed, Stream::Agent);
    let mut noise_rng = stream(seed, Stream::Noise);
    let mut agent = Agent::new(
        env_config.state_len(),
        env_config.action_len(),
        energy_indices(env_config.world.n_uavs()),
        config.clone(),
        &mut agent_rng,
    )?;
    let mut buffer = ReplayBuffer::new(config.buffer_capacity);
    let mut curve: Vec<CurvePoint> = Vec::with_capacity(config.episodes);

    for episode in 0..config.episodes {
        let sigma = config.noise_sigma(episode);
        let mut state = env.reset(child_seed(seed, episode as u64));
        let mut total = 0.0;
        let mut q_sum = 0.0;
        let mut steps = 0usize;
        while !env.is_done() {
            let action = agent.select_action(&state, sigma, &mut noise_rng)?;
            let s = ArrayView2::from_shape((1, state.0.len()), &state.0).expect("row");
            let a = ArrayView2::from_shape((1, action.0.len()), &action.0).expect("row");
            q_sum += agent.q_values(s, a)?[0];
            let out = env.step(&action)?;
            total += out.reward;
            steps += 1;
            buffer.store(Transition {
                state,
                action,
                reward: out.reward,
                next_state: out.state.clone(),
                done: out.done,
            });
            if buffer.len() >= config.batch_size {
                for _ in 0..config.updates_per_step {
                    let batch = Batch::from_transitions(&buffer.sample(config.batch_size, &mut agent_rng)?);
                    agent.critic_update(&batch)?;
                    agent.actor_update(&batch)?;
                    agent.soft_update_targets()?;
                }
            }
            state = out.state;
        }
        let window = curve.iter().rev().take(RUNNING_MEAN_WINDOW - 1);
        let (sum, count) = window.fold((total, 1usize), |(s, c), p| (s + p.total_reward, c + 1));
        let point = CurvePoint {
            episode,
            total_reward: total,
            running_mean: sum / count as f64,
            mean_q: q_sum / steps.max(1) as f64,
        };
        log::info!(
            "episode {episode}: reward {:.3} (running mean {:.3}, mean Q {:.3})",
            point.total_reward,
            point.running_mean,
            point.mean_q
        );
        on_episode(&point);
        curve.push(point);
    }
    Ok(TrainOutcome { agent, curve })
}

#[cfg(test)]
mod tests;
