//! The episodic decision process the agents interact with.
//!
//! State layout, per UAV: position (3), goal (3), velocity (3), energy (1);
//! followed by every user's ground position (2). All entries are normalized
//! into `[0, 1]`. Actions hold four entries per UAV: speed fraction,
//! azimuth, polar angle and band selector, each in `[0, 1]`.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::channel::{covering_radius, uavs_connected, ChannelConfig};
use crate::energy::EnergyConfig;
use crate::error::{config_err, Error, Result};
use crate::metrics::{jain_index, EfficiencyMode, EpisodeRecord, SlotRow, UavSample};
use crate::rng::{stream, Rng, Stream};
use crate::world::{
    spawn_users, step_uav, step_users, turn_rate, FlightLimits, GroundUser, UavState, Vec3,
    WorldConfig,
};

/// Features per UAV in the state vector.
pub const UAV_FEATURES: usize = 10;
/// Offset of the energy feature inside a UAV block.
pub const ENERGY_OFFSET: usize = 9;
/// Action entries per UAV.
pub const ACTION_PER_UAV: usize = 4;

/// Normalized observation.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(pub Vec<f64>);

/// Normalized action of the whole fleet.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionVector(pub Vec<f64>);

impl StateVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl ActionVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

pub fn state_len(n_uavs: usize, n_users: usize) -> usize {
    UAV_FEATURES * n_uavs + 2 * n_users
}

pub fn action_len(n_uavs: usize) -> usize {
    ACTION_PER_UAV * n_uavs
}

/// Indices of the battery features in the state vector.
pub fn energy_indices(n_uavs: usize) -> Vec<usize> {
    (0..n_uavs).map(|i| i * UAV_FEATURES + ENERGY_OFFSET).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardConfig {
    /// Weight of the fairness-weighted throughput term.
    pub fair_throughput_weight: f64,
    /// Weight of the per-slot energy term.
    pub energy_weight: f64,
    /// Bonus for reaching the goal, split evenly across UAVs.
    pub goal_bonus: f64,
    /// Added once per UAV whose altitude was clamped; must be <= 0.
    pub altitude_penalty: f64,
    /// Added when the UAV network is disconnected; must be <= 0.
    pub disconnect_penalty: f64,
    /// Weight of the per-slot progress toward the goals, in units of
    /// `v_max·dt` per UAV.
    pub progress_weight: f64,
    /// Throughput normalizer, bits/s.
    pub reference_rate: f64,
    /// Replace moves that would disconnect the UAV network by hovering.
    pub hard_connectivity: bool,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            fair_throughput_weight: 1.0,
            energy_weight: 1.0,
            goal_bonus: 50.0,
            altitude_penalty: -1.0,
            disconnect_penalty: -2.0,
            progress_weight: 2.0,
            reference_rate: 1e8,
            hard_connectivity: false,
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.fair_throughput_weight > 0.0 && self.fair_throughput_weight.is_finite()) {
            return Err(config_err("reward.fair_throughput_weight", "must be > 0"));
        }
        if !(self.energy_weight > 0.0 && self.energy_weight.is_finite()) {
            return Err(config_err("reward.energy_weight", "must be > 0"));
        }
        if !(self.altitude_penalty <= 0.0) {
            return Err(config_err("reward.altitude_penalty", "must be <= 0"));
        }
        if !(self.disconnect_penalty <= 0.0) {
            return Err(config_err("reward.disconnect_penalty", "must be <= 0"));
        }
        if !(self.goal_bonus >= 0.0 && self.goal_bonus.is_finite()) {
            return Err(config_err("reward.goal_bonus", "must be finite and >= 0"));
        }
        if !(self.progress_weight >= 0.0 && self.progress_weight.is_finite()) {
            return Err(config_err("reward.progress_weight", "must be finite and >= 0"));
        }
        if !(self.reference_rate > 0.0 && self.reference_rate.is_finite()) {
            return Err(config_err("reward.reference_rate", "must be > 0"));
        }
        Ok(())
    }
}

/// `(s, a, r, s', done)` tuple.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: StateVector,
    pub action: ActionVector,
    pub reward: f64,
    pub next_state: StateVector,
    pub done: bool,
}

/// Everything the environment needs to run episodes.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EnvConfig {
    pub world: WorldConfig,
    pub channel: ChannelConfig,
    pub energy: EnergyConfig,
    pub reward: RewardConfig,
    pub efficiency: EfficiencyMode,
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        self.world.validate()?;
        self.channel.validate()?;
        self.energy.validate()?;
        self.reward.validate()
    }

    pub fn state_len(&self) -> usize {
        state_len(self.world.n_uavs(), self.world.n_users)
    }

    pub fn action_len(&self) -> usize {
        action_len(self.world.n_uavs())
    }
}

/// Velocity and band commanded to one UAV for one slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UavCommand {
    pub velocity: Vec3,
    pub band: usize,
}

/// Maps one UAV's slice of the action vector to a velocity and a band.
/// Out-of-range components are clipped into `[0, 1]`.
pub fn decode_action(
    action: &ActionVector,
    uav_index: usize,
    v_max: f64,
    n_bands: usize,
) -> UavCommand {
    let base = uav_index * ACTION_PER_UAV;
    let c = |k: usize| action.0[base + k].clamp(0.0, 1.0);
    let speed = c(0) * v_max;
    let azimuth = c(1) * TAU;
    let polar = c(2) * PI;
    let velocity = Vec3::new(
        speed * polar.sin() * azimuth.cos(),
        speed * polar.sin() * azimuth.sin(),
        speed * polar.cos(),
    );
    let band = ((c(3) * n_bands as f64).floor() as usize).min(n_bands.saturating_sub(1));
    UavCommand { velocity, band }
}

/// Jain index times the sum: the fairness-weighted total.
pub fn fair_throughput(throughputs: &[f64]) -> Result<f64> {
    let jain = jain_index(throughputs)?;
    Ok(jain * throughputs.iter().sum::<f64>())
}

/// Diagnostics of one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct StepInfo {
    pub clamped: Vec<bool>,
    pub connected: bool,
    /// bits/s per user
    pub user_throughput: Vec<f64>,
    /// Energy drawn from each battery this slot, J.
    pub slot_energy: Vec<f64>,
    pub depleted: Vec<bool>,
    /// UAVs that reached their goal for the first time this slot.
    pub arrived: Vec<bool>,
    pub fair_throughput: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: StateVector,
    pub reward: f64,
    pub done: bool,
    pub info: StepInfo,
}

/// One running mission.
#[derive(Debug, Clone)]
pub struct Env {
    config: EnvConfig,
    uavs: Vec<UavState>,
    users: Vec<GroundUser>,
    bands: Vec<usize>,
    reached: Vec<bool>,
    grounded: Vec<bool>,
    t: usize,
    done: bool,
    freeze_users: bool,
    env_rng: Rng,
    users_rng: Rng,
    record: EpisodeRecord,
}

impl Env {
    pub fn new(config: EnvConfig) -> Result<Self> {
        config.validate()?;
        let mut env = Self {
            uavs: Vec::new(),
            users: Vec::new(),
            bands: Vec::new(),
            reached: Vec::new(),
            grounded: Vec::new(),
            t: 0,
            done: true,
            freeze_users: false,
            env_rng: stream(0, Stream::Env),
            users_rng: stream(0, Stream::Users),
            record: EpisodeRecord::new(Vec::new(), 1.0, 1.0, 1.0, config.efficiency),
            config,
        };
        env.reset(0);
        Ok(env)
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn uavs(&self) -> &[UavState] {
        &self.uavs
    }

    pub fn users(&self) -> &[GroundUser] {
        &self.users
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn record(&self) -> &EpisodeRecord {
        &self.record
    }

    pub fn into_record(self) -> EpisodeRecord {
        self.record
    }

    /// Keeps users in place; used by tests that need a fixed geometry.
    pub fn set_freeze_users(&mut self, freeze: bool) {
        self.freeze_users = freeze;
    }

    /// Overrides user placement of the current episode.
    pub fn set_users(&mut self, users: Vec<GroundUser>) {
        assert_eq!(users.len(), self.config.world.n_users);
        self.users = users;
    }

    /// Starts a new episode: UAVs at rest at their starts with full
    /// batteries, users drawn uniformly over the area.
    pub fn reset(&mut self, seed: u64) -> StateVector {
        self.reset_inner(seed, None)
    }

    /// Like [`Env::reset`] but with every UAV start moved to `altitude`.
    pub fn reset_at_altitude(&mut self, seed: u64, altitude: f64) -> StateVector {
        self.reset_inner(seed, Some(altitude))
    }

    fn reset_inner(&mut self, seed: u64, altitude: Option<f64>) -> StateVector {
        let w = &self.config.world;
        let capacity = self.config.energy.battery_capacity;
        self.env_rng = stream(seed, Stream::Env);
        self.users_rng = stream(seed, Stream::Users);
        self.uavs = (0..w.n_uavs())
            .map(|i| {
                let mut position = w.start(i);
                if let Some(z) = altitude {
                    position.z = z.clamp(w.z_min, w.z_max);
                }
                UavState {
                    position,
                    velocity: Vec3::ZERO,
                    heading: 0.0,
                    energy: capacity,
                    goal: w.goal(i),
                }
            })
            .collect();
        self.users = spawn_users(w, &mut self.env_rng);
        self.bands = (0..w.n_uavs()).map(|i| i % self.config.channel.n_bands).collect();
        self.reached = vec![false; w.n_uavs()];
        self.grounded = vec![false; w.n_uavs()];
        self.t = 0;
        self.done = false;
        self.record = EpisodeRecord::new(
            vec![capacity; w.n_uavs()],
            w.dt,
            self.config.reward.reference_rate,
            capacity,
            self.config.efficiency,
        );
        self.encode_state()
    }

    /// Normalized observation of the current world.
    pub fn encode_state(&self) -> StateVector {
        let w = &self.config.world;
        let nx = |v: f64| (v / w.area_size).clamp(0.0, 1.0);
        let nz = |v: f64| ((v - w.z_min) / (w.z_max - w.z_min)).clamp(0.0, 1.0);
        let nv = |v: f64| ((v + w.v_max) / (2.0 * w.v_max)).clamp(0.0, 1.0);
        let capacity = self.config.energy.battery_capacity;
        let mut s = Vec::with_capacity(self.config.state_len());
        for u in &self.uavs {
            s.extend([nx(u.position.x), nx(u.position.y), nz(u.position.z)]);
            s.extend([nx(u.goal.x), nx(u.goal.y), nz(u.goal.z)]);
            s.extend([nv(u.velocity.x), nv(u.velocity.y), nv(u.velocity.z)]);
            s.push((u.energy / capacity).clamp(0.0, 1.0));
        }
        for u in &self.users {
            s.extend([nx(u.x), nx(u.y)]);
        }
        StateVector(s)
    }

    /// Applies a fleet action for one slot.
    pub fn step(&mut self, action: &ActionVector) -> Result<StepOutcome> {
        if action.0.len() != self.config.action_len() {
            return Err(Error::ShapeMismatch {
                expected: format!("action of length {}", self.config.action_len()),
                found: format!("length {}", action.0.len()),
            });
        }
        let w = &self.config.world;
        let commands: Vec<UavCommand> = (0..w.n_uavs())
            .map(|i| decode_action(action, i, w.v_max, self.config.channel.n_bands))
            .collect();
        let limits = w.limits();
        self.step_commands(&commands, &limits)
    }

    /// Applies explicit per-UAV commands under the given flight limits.
    pub fn step_commands(
        &mut self,
        commands: &[UavCommand],
        limits: &FlightLimits,
    ) -> Result<StepOutcome> {
        if self.done {
            return Err(Error::EpisodeFinished);
        }
        let n = self.uavs.len();
        if commands.len() != n {
            return Err(Error::ShapeMismatch {
                expected: format!("{n} commands"),
                found: format!("{}", commands.len()),
            });
        }
        let dt = self.config.world.dt;
        let prev = self.uavs.clone();

        let mut moved = Vec::with_capacity(n);
        let mut clamped = vec![false; n];
        for i in 0..n {
            let velocity = if self.grounded[i] { Vec3::ZERO } else { commands[i].velocity };
            let (s, c) = step_uav(&prev[i], velocity, dt, limits)?;
            moved.push(s);
            clamped[i] = c;
            if !self.grounded[i] {
                self.bands[i] = commands[i].band.min(self.config.channel.n_bands - 1);
            }
        }
        if self.config.reward.hard_connectivity {
            let positions: Vec<Vec3> = moved.iter().map(|u| u.position).collect();
            if !uavs_connected(&positions, self.config.world.uav_uav_range) {
                for i in 0..n {
                    let (s, c) = step_uav(&prev[i], Vec3::ZERO, dt, limits)?;
                    moved[i] = s;
                    clamped[i] = c;
                }
            }
        }

        let mut slot_energy = vec![0.0; n];
        let mut depleted = vec![false; n];
        let serving: Vec<bool> = self.grounded.iter().map(|g| !g).collect();
        for i in 0..n {
            if self.grounded[i] {
                continue;
            }
            let distance = moved[i].position.distance(prev[i].position);
            let (s, d) = self.config.energy.drain(&moved[i], distance)?;
            slot_energy[i] = prev[i].energy - s.energy;
            depleted[i] = d;
            moved[i] = s;
            if d || s.energy <= 0.0 {
                self.grounded[i] = true;
            }
        }
        self.uavs = moved;

        if !self.freeze_users {
            self.users = step_users(
                &self.users,
                self.config.world.area_size,
                dt,
                self.config.world.user_direction_jitter,
                &mut self.users_rng,
            );
        }

        let user_throughput = self.serve_users(&serving)?;
        let positions: Vec<Vec3> = self.uavs.iter().map(|u| u.position).collect();
        let connected = uavs_connected(&positions, self.config.world.uav_uav_range);

        let mut arrived = vec![false; n];
        for i in 0..n {
            if !self.reached[i]
                && self.uavs[i].position.distance(self.uavs[i].goal) <= self.config.world.goal_radius
            {
                self.reached[i] = true;
                arrived[i] = true;
            }
        }

        let r = &self.config.reward;
        let normalized: Vec<f64> = user_throughput.iter().map(|t| t / r.reference_rate).collect();
        let fair = fair_throughput(&normalized)?;
        let mean_energy = slot_energy.iter().sum::<f64>() / n as f64;
        let progress: f64 = (0..n)
            .map(|i| prev[i].position.distance(prev[i].goal) - self.uavs[i].position.distance(self.uavs[i].goal))
            .sum::<f64>()
            / (self.config.world.v_max * dt);
        let n_clamped = clamped.iter().filter(|c| **c).count() as f64;
        let n_arrived = arrived.iter().filter(|a| **a).count() as f64;
        let mut reward = r.fair_throughput_weight * fair
            - r.energy_weight * mean_energy / self.config.energy.battery_capacity
            + r.altitude_penalty * n_clamped
            + r.goal_bonus / n as f64 * n_arrived
            + r.progress_weight * progress;
        if !connected {
            reward += r.disconnect_penalty;
        }

        self.t += 1;
        self.done = self.t >= self.config.world.horizon
            || self.grounded.iter().all(|g| *g)
            || self.reached.iter().all(|r| *r);

        let row = SlotRow {
            t: self.t,
            uavs: self
                .uavs
                .iter()
                .zip(&prev)
                .map(|(u, p)| UavSample {
                    x: u.position.x,
                    y: u.position.y,
                    z: u.position.z,
                    heading: u.heading,
                    turn_rate: turn_rate(p.heading, u.heading, dt),
                    energy: u.energy,
                })
                .collect(),
            user_throughput: user_throughput.clone(),
            reward,
            connected,
            clamped: n_clamped > 0.0,
        };
        self.record.push(row, slot_energy.iter().sum())?;

        Ok(StepOutcome {
            state: self.encode_state(),
            reward,
            done: self.done,
            info: StepInfo {
                clamped,
                connected,
                user_throughput,
                slot_energy,
                depleted,
                arrived,
                fair_throughput: fair,
            },
        })
    }

    /// Per-user rate: each user attaches to the serving UAV with the best
    /// link among those whose covering disc contains it, and shares that
    /// UAV's band equally with every other user on the same band.
    fn serve_users(&mut self, serving: &[bool]) -> Result<Vec<f64>> {
        let ch = &self.config.channel;
        let range = self.config.world.covering_range;
        let mut best: Vec<Option<(f64, usize)>> = Vec::with_capacity(self.users.len());
        for user in &self.users {
            let mut pick: Option<(f64, usize)> = None;
            for (i, uav) in self.uavs.iter().enumerate() {
                if !serving[i] {
                    continue;
                }
                let p = uav.position;
                let horizontal = (p.x - user.x).hypot(p.y - user.y);
                if horizontal > covering_radius(p.z, range) {
                    continue;
                }
                let loss = if ch.stochastic_los {
                    ch.sampled_pathloss(p, user.position(), &mut self.env_rng)?
                } else {
                    ch.expected_pathloss(p, user.position())?
                };
                let rate = ch.rate_for_pathloss(loss);
                if pick.is_none_or(|(r, _)| rate > r) {
                    pick = Some((rate, self.bands[i]));
                }
            }
            best.push(pick);
        }
        let mut per_band = vec![0usize; ch.n_bands];
        for (_, band) in best.iter().flatten() {
            per_band[*band] += 1;
        }
        Ok(best
            .iter()
            .map(|b| b.map_or(0.0, |(rate, band)| rate / per_band[band] as f64))
            .collect())
    }

    /// Distance from each UAV to its goal.
    pub fn goal_distances(&self) -> Vec<f64> {
        self.uavs.iter().map(|u| u.position.distance(u.goal)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    fn env() -> Env {
        Env::new(EnvConfig::default()).unwrap()
    }

    fn hover() -> ActionVector {
        ActionVector(vec![0.0; 8])
    }

    #[test]
    fn default_widths() {
        let c = EnvConfig::default();
        assert_eq!(c.state_len(), 30);
        assert_eq!(c.action_len(), 8);
        assert_eq!(energy_indices(2), vec![9, 19]);
    }

    #[test]
    fn state_normalization() {
        let mut e = env();
        e.reset(3);
        e.uavs[0].position = Vec3::new(100.0, 100.0, 55.0);
        e.uavs[1].position = Vec3::new(0.0, 0.0, 10.0);
        e.uavs[1].energy = 0.0;
        let s = e.encode_state();
        assert_eq!(s.0.len(), 30);
        assert_eq!(&s.0[0..3], &[0.5, 0.5, 0.5]);
        assert_eq!(s.0[9], 1.0);
        assert_eq!(&s.0[10..13], &[0.0, 0.0, 0.0]);
        assert_eq!(s.0[19], 0.0);
        assert!(s.0.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn decode_examples() {
        let up = decode_action(&ActionVector(vec![1.0, 0.3, 0.0, 0.0]), 0, 5.0, 2);
        assert_abs_diff_eq!(up.velocity.x, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(up.velocity.z, 5.0, epsilon = 1e-15);
        let still = decode_action(&ActionVector(vec![0.0, 0.7, 0.2, 0.9]), 0, 5.0, 2);
        assert_eq!(still.velocity.norm(), 0.0);
        assert_eq!(still.band, 1);
        let east = decode_action(&ActionVector(vec![1.0, 0.0, 0.5, 1.0]), 0, 5.0, 2);
        assert_abs_diff_eq!(east.velocity.x, 5.0, epsilon = 1e-12);
        assert_abs_diff_eq!(east.velocity.y, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(east.velocity.z, 0.0, epsilon = 1e-12);
        assert_eq!(east.band, 1);
        let clipped = decode_action(&ActionVector(vec![2.0, -1.0, 0.5, -3.0]), 0, 5.0, 2);
        assert_abs_diff_eq!(clipped.velocity.norm(), 5.0, epsilon = 1e-12);
        assert_eq!(clipped.band, 0);
    }

    #[test]
    fn fair_throughput_examples() {
        assert_abs_diff_eq!(fair_throughput(&[3.0; 5]).unwrap(), 15.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            fair_throughput(&[7.0, 0.0, 0.0, 0.0, 0.0]).unwrap(),
            7.0 / 5.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(fair_throughput(&[2.0, 4.0]).unwrap(), 5.4, epsilon = 1e-12);
        assert!(fair_throughput(&[]).is_err());
    }

    #[test]
    fn hover_reward_is_fair_throughput_minus_hover_energy() {
        let mut e = env();
        e.reset(5);
        e.set_freeze_users(true);
        let out = e.step(&hover()).unwrap();
        assert!(out.info.connected);
        assert!(out.info.clamped.iter().all(|c| !c));
        let c = EnvConfig::default();
        let expected = out.info.fair_throughput - c.energy.hover_cost / c.energy.battery_capacity;
        assert_eq!(out.reward, expected);
        assert!(out.info.fair_throughput > 0.0);
    }

    #[test]
    fn climbing_past_ceiling_is_penalized() {
        let mut e = env();
        e.reset(1);
        e.set_freeze_users(true);
        e.uavs[0].position.z = 98.0;
        let base = {
            let mut f = e.clone();
            f.step(&hover()).unwrap()
        };
        let mut a = hover().0;
        a[0] = 1.0; // straight up at v_max
        let out = e.step(&ActionVector(a)).unwrap();
        assert!(out.info.clamped[0]);
        assert_eq!(e.uavs[0].position.z, 100.0);
        assert!(out.reward < base.reward - 0.5);
    }

    #[test]
    fn episode_ends_at_horizon() {
        let mut e = env();
        e.reset(2);
        let mut steps = 0;
        loop {
            let out = e.step(&hover()).unwrap();
            steps += 1;
            if out.done {
                break;
            }
        }
        assert_eq!(steps, 80);
        assert!(matches!(e.step(&hover()), Err(Error::EpisodeFinished)));
        e.record().verify(1e-9).unwrap();
        assert_eq!(e.record().rows.len(), 80);
    }

    #[test]
    fn reset_is_deterministic() {
        let mut a = env();
        let mut b = env();
        let sa = a.reset(42);
        assert_eq!(sa, b.reset(42));
        assert_ne!(sa, b.reset(43));
        assert_eq!(sa.0[9], 1.0);
        assert_eq!(sa.0[19], 1.0);
        assert_eq!(a.uavs()[1].position, Vec3::new(206.0, 15.0, 10.0));
    }

    #[test]
    fn same_band_users_share_it() {
        let mut e = env();
        e.reset(9);
        e.set_freeze_users(true);
        let mut a = hover().0;
        a[3] = 0.0;
        a[7] = 0.9;
        let split = e.clone().step(&ActionVector(a.clone())).unwrap();
        a[7] = 0.0;
        let shared = e.step(&ActionVector(a)).unwrap();
        let sum = |v: &[f64]| v.iter().sum::<f64>();
        assert!(sum(&shared.info.user_throughput) < sum(&split.info.user_throughput));
    }

    #[test]
    fn goal_arrival_pays_bonus_once() {
        let mut e = env();
        e.reset(4);
        e.set_freeze_users(true);
        let goal = e.uavs[0].goal;
        e.uavs[0].position = goal + Vec3::new(-12.0, 0.0, 0.0);
        // east at 5 m/s: 12 m -> 7 m, inside the 10 m goal radius
        let mut a = hover().0;
        a[0] = 1.0;
        a[2] = 0.5;
        let out = e.step(&ActionVector(a.clone())).unwrap();
        assert!(out.info.arrived[0]);
        let again = e.step(&hover()).unwrap();
        assert!(!again.info.arrived[0]);
    }

    #[test]
    fn hard_connectivity_blocks_splitting_moves() {
        let mut cfg = EnvConfig::default();
        cfg.world.uav_uav_range = 193.0;
        cfg.world.uav_starts = vec![[5.0, 100.0, 50.0], [195.0, 100.0, 50.0]];
        cfg.reward.hard_connectivity = true;
        let mut e = Env::new(cfg).unwrap();
        e.reset(0);
        // UAV-0 flies west: separation would grow from 190 m to 195 m
        let a = ActionVector(vec![1.0, 0.5, 0.5, 0.0, 0.0, 0.0, 0.5, 0.0]);
        let out = e.step(&a).unwrap();
        assert!(out.info.connected);
        assert_eq!(e.uavs()[0].position.x, 5.0);
    }

    #[test]
    fn frozen_world_reward_is_reproducible() {
        let a = ActionVector(vec![0.4, 0.2, 0.5, 0.1, 0.8, 0.6, 0.4, 0.7]);
        let mut e = env();
        e.reset(8);
        e.set_freeze_users(true);
        let r1 = e.clone().step(&a).unwrap().reward;
        let r2 = e.clone().step(&a).unwrap().reward;
        assert_eq!(r1, r2);
    }

    proptest! {
        #[test]
        fn decoded_speed_matches_component(a in prop::collection::vec(0.0f64..=1.0, 4)) {
            let v = decode_action(&ActionVector(a.clone()), 0, 5.0, 2).velocity.norm();
            let expected = a[0] * 5.0;
            if expected > 0.0 {
                prop_assert!(((v - expected) / expected).abs() <= 1e-12);
            } else {
                prop_assert_eq!(v, 0.0);
            }
        }

        #[test]
        fn fair_throughput_at_most_sum(v in prop::collection::vec(0.0f64..10.0, 1..8)) {
            let s: f64 = v.iter().sum();
            prop_assert!(fair_throughput(&v).unwrap() <= s * (1.0 + 1e-12));
        }
    }

    #[test]
    fn energy_telescopes_over_random_episode() {
        let mut e = env();
        e.reset(77);
        let mut rng = stream(77, Stream::Noise);
        use rand::Rng as _;
        while !e.is_done() {
            let a = ActionVector((0..8).map(|_| rng.random::<f64>()).collect());
            e.step(&a).unwrap();
        }
        let rec = e.record();
        let final_energy: f64 = rec.rows.last().unwrap().uavs.iter().map(|u| u.energy).sum();
        assert_relative_eq!(rec.aggregates.total_energy, 2e5 - final_energy, max_relative = 1e-9);
    }
}
