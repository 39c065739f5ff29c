//! Comparison policies: uniformly random moves and tabular Q-learning over
//! a coarse grid. Both fly horizontally at a fixed altitude.

use std::f64::consts::TAU;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::channel::uavs_connected;
use crate::env::{Env, EnvConfig, UavCommand};
use crate::error::{config_err, Result};
use crate::rng::{child_seed, stream, Rng, Stream};
use crate::world::{FlightLimits, Vec3};

/// Knobs shared by both comparison policies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    /// Flight altitude in meters.
    pub altitude: f64,
    /// Longest horizontal move per slot, meters.
    pub max_move: f64,
    /// Number of compass directions available to the tabular learner.
    pub direction_buckets: usize,
    /// Move lengths available to the tabular learner, meters.
    pub move_lengths: Vec<f64>,
    /// Side of a square grid cell, meters.
    pub cell_size: f64,
    pub episodes: usize,
    pub learning_rate: f64,
    pub gamma: f64,
    pub epsilon: f64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            altitude: 55.0,
            max_move: 100.0,
            direction_buckets: 8,
            move_lengths: vec![0.0, 50.0, 100.0],
            cell_size: 20.0,
            episodes: 50,
            learning_rate: 0.1,
            gamma: 0.9,
            epsilon: 0.1,
        }
    }
}

impl BaselineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.altitude.is_finite() && self.altitude > 0.0) {
            return Err(config_err("baseline.altitude", "must be positive"));
        }
        if !(self.max_move.is_finite() && self.max_move >= 0.0) {
            return Err(config_err("baseline.max_move", "must be non-negative"));
        }
        if self.direction_buckets == 0 {
            return Err(config_err("baseline.direction_buckets", "must be at least 1"));
        }
        if self.move_lengths.is_empty()
            || self
                .move_lengths
                .iter()
                .any(|l| !(l.is_finite() && (0.0..=self.max_move).contains(l)))
        {
            return Err(config_err(
                "baseline.move_lengths",
                "must be a non-empty list within [0, max_move]",
            ));
        }
        if !(self.cell_size.is_finite() && self.cell_size > 0.0) {
            return Err(config_err("baseline.cell_size", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.learning_rate) {
            return Err(config_err("baseline.learning_rate", "must lie in [0, 1]"));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(config_err("baseline.gamma", "must lie in [0, 1)"));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(config_err("baseline.epsilon", "must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Limits that admit one full move per slot at the fixed altitude.
    pub fn limits(&self, env: &EnvConfig) -> FlightLimits {
        FlightLimits {
            v_max: self.max_move / env.world.dt,
            ..env.world.limits()
        }
    }
}

/// Whether moving UAV `index` to `target` keeps it inside the area and the
/// swarm connected, with every other UAV at `positions`.
fn admissible(env: &Env, positions: &[Vec3], index: usize, target: Vec3) -> bool {
    let w = &env.config().world;
    if !w.in_area(target.x, target.y) {
        return false;
    }
    let mut trial = positions.to_vec();
    trial[index] = target;
    uavs_connected(&trial, w.uav_uav_range)
}

/// Turns desired horizontal displacements into commands, replacing any move
/// that would leave the area or split the swarm by a hover. UAVs are
/// processed in index order against the already accepted moves.
pub fn resolve_moves(env: &Env, moves: &[Vec3], dt: f64) -> Vec<UavCommand> {
    let n_bands = env.config().channel.n_bands;
    let mut positions: Vec<Vec3> = env.uavs().iter().map(|u| u.position).collect();
    let mut commands = Vec::with_capacity(moves.len());
    for (i, m) in moves.iter().enumerate() {
        let target = positions[i] + *m;
        let velocity = if admissible(env, &positions, i, target) {
            positions[i] = target;
            *m * (1.0 / dt)
        } else {
            Vec3::ZERO
        };
        commands.push(UavCommand { velocity, band: i % n_bands });
    }
    commands
}

/// Draws one uniformly random horizontal move per UAV: direction uniform
/// over the circle, length uniform in `[0, max_move]`. Inadmissible moves
/// become hovers.
pub fn random_policy_step(env: &Env, max_move: f64, rng: &mut Rng) -> Vec<UavCommand> {
    let moves: Vec<Vec3> = env
        .uavs()
        .iter()
        .map(|_| {
            let direction = rng.random::<f64>() * TAU;
            let length = rng.random::<f64>() * max_move;
            Vec3::new(length * direction.cos(), length * direction.sin(), 0.0)
        })
        .collect();
    resolve_moves(env, &moves, env.config().world.dt)
}

/// Dense Q-table with one-step Q-learning updates.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularQ {
    n_states: usize,
    n_actions: usize,
    values: Vec<f64>,
    pub learning_rate: f64,
    pub gamma: f64,
}

impl TabularQ {
    pub fn new(n_states: usize, n_actions: usize, learning_rate: f64, gamma: f64) -> Self {
        Self {
            n_states,
            n_actions,
            values: vec![0.0; n_states * n_actions],
            learning_rate,
            gamma,
        }
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn get(&self, state: usize, action: usize) -> f64 {
        self.values[state * self.n_actions + action]
    }

    pub fn row(&self, state: usize) -> &[f64] {
        &self.values[state * self.n_actions..(state + 1) * self.n_actions]
    }

    pub fn max_value(&self, state: usize) -> f64 {
        self.row(state).iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Lowest-index action of maximal value.
    pub fn greedy(&self, state: usize) -> usize {
        let row = self.row(state);
        let mut best = 0;
        for (a, v) in row.iter().enumerate() {
            if *v > row[best] {
                best = a;
            }
        }
        best
    }

    pub fn epsilon_greedy(&self, state: usize, epsilon: f64, rng: &mut Rng) -> usize {
        if rng.random::<f64>() < epsilon {
            rng.random_range(0..self.n_actions)
        } else {
            self.greedy(state)
        }
    }

    /// `Q(s,a) += α (r + γ max Q(s',·) − Q(s,a))`; `next = None` marks a
    /// terminal transition.
    pub fn update(&mut self, state: usize, action: usize, reward: f64, next: Option<usize>) {
        let bootstrap = next.map_or(0.0, |s| self.gamma * self.max_value(s));
        let k = state * self.n_actions + action;
        self.values[k] += self.learning_rate * (reward + bootstrap - self.values[k]);
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Independent per-UAV Q-tables over grid cells and discrete moves.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularPolicy {
    pub config: BaselineConfig,
    cells_per_side: usize,
    area_size: f64,
    pub tables: Vec<TabularQ>,
}

impl TabularPolicy {
    pub fn new(env: &EnvConfig, config: BaselineConfig) -> Result<Self> {
        config.validate()?;
        let area_size = env.world.area_size;
        let cells_per_side = (area_size / config.cell_size).ceil().max(1.0) as usize;
        let n_actions = config.direction_buckets * config.move_lengths.len();
        let tables = (0..env.world.n_uavs())
            .map(|_| {
                TabularQ::new(
                    cells_per_side * cells_per_side,
                    n_actions,
                    config.learning_rate,
                    config.gamma,
                )
            })
            .collect();
        Ok(Self {
            config,
            cells_per_side,
            area_size,
            tables,
        })
    }

    /// Grid cell of a ground position; points outside the area map to the
    /// nearest border cell.
    pub fn cell(&self, position: Vec3) -> usize {
        let n = self.cells_per_side;
        let index = |v: f64| {
            let v = v.clamp(0.0, self.area_size);
            ((v / self.config.cell_size) as usize).min(n - 1)
        };
        index(position.y) * n + index(position.x)
    }

    /// Horizontal displacement of a discrete action.
    pub fn displacement(&self, action: usize) -> Vec3 {
        let buckets = self.config.direction_buckets;
        let direction = (action % buckets) as f64 * TAU / buckets as f64;
        let length = self.config.move_lengths[action / buckets];
        Vec3::new(length * direction.cos(), length * direction.sin(), 0.0)
    }

    fn states(&self, env: &Env) -> Vec<usize> {
        env.uavs().iter().map(|u| self.cell(u.position)).collect()
    }

    fn commands(&self, env: &Env, actions: &[usize]) -> Vec<UavCommand> {
        let moves: Vec<Vec3> = actions.iter().map(|a| self.displacement(*a)).collect();
        resolve_moves(env, &moves, env.config().world.dt)
    }

    /// Greedy commands for the current world.
    pub fn act(&self, env: &Env) -> Vec<UavCommand> {
        let actions: Vec<usize> = self
            .states(env)
            .iter()
            .zip(&self.tables)
            .map(|(s, q)| q.greedy(*s))
            .collect();
        self.commands(env, &actions)
    }
}

/// Trains a [`TabularPolicy`] with ε-greedy exploration; every UAV learns
/// from the shared fleet reward.
pub fn tabular_q_train(env_config: &EnvConfig, config: &BaselineConfig, seed: u64) -> Result<TabularPolicy> {
    let mut policy = TabularPolicy::new(env_config, config.clone())?;
    let mut env = Env::new(env_config.clone())?;
    let limits = config.limits(env_config);
    let mut rng = stream(seed, Stream::Baseline);
    for episode in 0..config.episodes {
        env.reset_at_altitude(child_seed(seed, episode as u64), config.altitude);
        while !env.is_done() {
            let states = policy.states(&env);
            let actions: Vec<usize> = states
                .iter()
                .zip(&policy.tables)
                .map(|(s, q)| q.epsilon_greedy(*s, config.epsilon, &mut rng))
                .collect();
            let commands = policy.commands(&env, &actions);
            let outcome = env.step_commands(&commands, &limits)?;
            let next = policy.states(&env);
            for (i, q) in policy.tables.iter_mut().enumerate() {
                q.update(
                    states[i],
                    actions[i],
                    outcome.reward,
                    (!outcome.done).then_some(next[i]),
                );
            }
        }
    }
    Ok(policy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::{prop_assert, proptest, ProptestConfig};

    fn env_at_altitude(seed: u64) -> Env {
        let mut env = Env::new(EnvConfig::default()).unwrap();
        env.reset_at_altitude(seed, 55.0);
        env
    }

    #[test]
    fn leaving_the_area_means_hovering() {
        let env = env_at_altitude(1);
        // UAV 0 starts near the south-west corner
        let moves = [Vec3::new(-50.0, 0.0, 0.0), Vec3::ZERO];
        let c = resolve_moves(&env, &moves, 1.0);
        assert_eq!(c[0].velocity, Vec3::ZERO);
        let moves = [Vec3::new(30.0, 0.0, 0.0), Vec3::ZERO];
        assert_eq!(resolve_moves(&env, &moves, 1.0)[0].velocity, moves[0]);
    }

    #[test]
    fn splitting_the_swarm_means_hovering() {
        let mut config = EnvConfig::default();
        config.world.uav_uav_range = 200.0;
        config.world.uav_starts = vec![[10.0, 100.0, 55.0], [190.0, 100.0, 55.0]];
        let mut env = Env::new(config).unwrap();
        env.reset(1);
        let apart = [Vec3::ZERO, Vec3::new(0.0, 100.0, 0.0)];
        assert_eq!(resolve_moves(&env, &apart, 1.0)[1].velocity, Vec3::ZERO);
        let closer = [Vec3::ZERO, Vec3::new(-20.0, 0.0, 0.0)];
        assert_eq!(resolve_moves(&env, &closer, 1.0)[1].velocity, closer[1]);
    }

    #[test]
    fn zero_length_move_keeps_position() {
        let mut env = env_at_altitude(2);
        let before: Vec<Vec3> = env.uavs().iter().map(|u| u.position).collect();
        let c = resolve_moves(&env, &[Vec3::ZERO, Vec3::ZERO], 1.0);
        let limits = BaselineConfig::default().limits(env.config());
        env.step_commands(&c, &limits).unwrap();
        let after: Vec<Vec3> = env.uavs().iter().map(|u| u.position).collect();
        assert_eq!(before, after);
    }

    #[test]
    fn baselines_use_distinct_bands() {
        let env = env_at_altitude(3);
        let mut rng = stream(3, Stream::Baseline);
        let c = random_policy_step(&env, 100.0, &mut rng);
        assert_eq!(c[0].band, 0);
        assert_eq!(c[1].band, 1);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn random_walk_stays_admissible(seed in 0u64..1000) {
            let mut config = EnvConfig::default();
            // start both UAVs inside the area so admissibility holds from slot 0
            config.world.uav_starts = vec![[12.0, 22.0, 55.0], [180.0, 15.0, 55.0]];
            let baseline = BaselineConfig::default();
            let limits = baseline.limits(&config);
            let range = config.world.uav_uav_range;
            let mut env = Env::new(config).unwrap();
            env.reset_at_altitude(seed, baseline.altitude);
            let mut rng = stream(seed, Stream::Baseline);
            while !env.is_done() {
                let c = random_policy_step(&env, baseline.max_move, &mut rng);
                env.step_commands(&c, &limits).unwrap();
                let p: Vec<Vec3> = env.uavs().iter().map(|u| u.position).collect();
                for u in &p {
                    prop_assert!(env.config().world.in_area(u.x, u.y));
                    prop_assert!(u.z == 55.0);
                }
                prop_assert!(uavs_connected(&p, range));
            }
        }
    }

    #[test]
    fn zero_learning_rate_freezes_table() {
        let mut q = TabularQ::new(3, 2, 0.0, 0.9);
        let before = q.clone();
        for k in 0..50 {
            q.update(k % 3, k % 2, 7.0, Some((k + 1) % 3));
        }
        assert_eq!(q, before);
    }

    #[test]
    fn bandit_converges_to_reward() {
        let mut q = TabularQ::new(1, 1, 0.5, 0.0);
        for _ in 0..200 {
            q.update(0, 0, 3.5, Some(0));
        }
        assert_abs_diff_eq!(q.get(0, 0), 3.5, epsilon = 1e-12);
    }

    /// Deterministic chain: in state 0 action 0 stays (r=1), action 1 moves
    /// to state 1 (r=0); in state 1 action 0 moves back (r=2), action 1
    /// stays (r=0.5).
    fn chain(state: usize, action: usize) -> (usize, f64) {
        match (state, action) {
            (0, 0) => (0, 1.0),
            (0, _) => (1, 0.0),
            (1, 0) => (0, 2.0),
            _ => (1, 0.5),
        }
    }

    fn value_iteration(gamma: f64) -> [[f64; 2]; 2] {
        let mut q = [[0.0f64; 2]; 2];
        for _ in 0..5000 {
            let v = [q[0][0].max(q[0][1]), q[1][0].max(q[1][1])];
            let mut next = [[0.0; 2]; 2];
            for (s, row) in next.iter_mut().enumerate() {
                for (a, cell) in row.iter_mut().enumerate() {
                    let (s2, r) = chain(s, a);
                    *cell = r + gamma * v[s2];
                }
            }
            q = next;
        }
        q
    }

    #[test]
    fn learned_chain_values_match_value_iteration() {
        let gamma = 0.8;
        let oracle = value_iteration(gamma);
        let mut q = TabularQ::new(2, 2, 0.2, gamma);
        for _ in 0..3000 {
            for s in 0..2 {
                for a in 0..2 {
                    let (s2, r) = chain(s, a);
                    q.update(s, a, r, Some(s2));
                }
            }
        }
        for s in 0..2 {
            for a in 0..2 {
                assert!((q.get(s, a) - oracle[s][a]).abs() < 1e-3);
            }
        }
    }

    proptest! {
        #[test]
        fn values_stay_bounded(rewards in proptest::collection::vec(-1.0f64..1.0, 200), alpha in 0.0f64..1.0) {
            let gamma = 0.9;
            let mut q = TabularQ::new(4, 3, alpha, gamma);
            for (k, r) in rewards.iter().enumerate() {
                q.update(k % 4, k % 3, *r, Some((k * 7 + 1) % 4));
            }
            let bound = 1.0 / (1.0 - gamma) + 1e-9;
            prop_assert!(q.is_finite());
            for s in 0..4 {
                for a in 0..3 {
                    prop_assert!(q.get(s, a).abs() <= bound);
                }
            }
        }
    }

    #[test]
    fn cells_cover_the_area() {
        let p = TabularPolicy::new(&EnvConfig::default(), BaselineConfig::default()).unwrap();
        assert_eq!(p.cell(Vec3::new(0.0, 0.0, 55.0)), 0);
        assert_eq!(p.cell(Vec3::new(200.0, 200.0, 55.0)), 99);
        assert_eq!(p.cell(Vec3::new(206.0, 15.0, 55.0)), 9);
        assert_abs_diff_eq!(p.displacement(2).y, 0.0);
        assert_abs_diff_eq!(p.displacement(8 + 2).y, 50.0, epsilon = 1e-12);
    }

    #[test]
    fn training_is_deterministic() {
        let config = BaselineConfig { episodes: 3, ..Default::default() };
        let a = tabular_q_train(&EnvConfig::default(), &config, 4).unwrap();
        let b = tabular_q_train(&EnvConfig::default(), &config, 4).unwrap();
        assert_eq!(a, b);
        assert!(a.tables.iter().all(TabularQ::is_finite));
    }
}
