//! Mission geometry: UAV kinematics, ground-user mobility and the bounded
//! flight volume.

use std::f64::consts::{PI, TAU};
use std::ops::{Add, Mul, Sub};

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{config_err, Error, Result};
use crate::rng::Rng;

/// Cartesian point or vector in meters; `z` is altitude.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn norm(self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn horizontal_norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Vec3) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, k: f64) -> Vec3 {
        Vec3::new(self.x * k, self.y * k, self.z * k)
    }
}

/// Kinematic state of one UAV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UavState {
    pub position: Vec3,
    /// m/s
    pub velocity: Vec3,
    /// Azimuth of the horizontal velocity, radians.
    pub heading: f64,
    /// Remaining battery energy, joules.
    pub energy: f64,
    pub goal: Vec3,
}

/// Altitude band and speed cap that a UAV move must respect.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlightLimits {
    pub z_min: f64,
    pub z_max: f64,
    pub v_max: f64,
}

/// A ground user wandering inside the square service area.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundUser {
    pub x: f64,
    pub y: f64,
    /// m/s, constant within an episode.
    pub speed: f64,
    /// Direction of travel, radians in `[0, 2π)`.
    pub direction: f64,
}

impl GroundUser {
    pub fn position(&self) -> [f64; 2] {
        [self.x, self.y]
    }
}

/// Static description of the mission.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorldConfig {
    /// Side length of the square service area, meters.
    pub area_size: f64,
    pub z_min: f64,
    pub z_max: f64,
    pub uav_starts: Vec<[f64; 3]>,
    pub uav_goals: Vec<[f64; 3]>,
    /// How far outside the service area a start or goal may lie, meters.
    pub start_margin: f64,
    pub n_users: usize,
    pub user_speed_min: f64,
    pub user_speed_max: f64,
    /// Half-width of the uniform per-slot heading jitter of users, radians.
    pub user_direction_jitter: f64,
    /// Episode length in slots.
    pub horizon: usize,
    /// Slot duration, seconds.
    pub dt: f64,
    pub v_max: f64,
    /// UAV-to-UAV communication range R, meters.
    pub uav_uav_range: f64,
    /// Slant range within which a UAV serves ground users, meters.
    pub covering_range: f64,
    /// Distance at which a UAV counts as arrived at its goal, meters.
    pub goal_radius: f64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self {
            area_size: 200.0,
            z_min: 10.0,
            z_max: 100.0,
            uav_starts: vec![[12.0, 22.0, 25.0], [206.0, 15.0, 1.0]],
            uav_goals: vec![[150.0, 180.0, 35.0], [78.0, 190.0, 1.0]],
            start_margin: 10.0,
            n_users: 5,
            user_speed_min: 0.0,
            user_speed_max: 2.0,
            user_direction_jitter: 0.1,
            horizon: 80,
            dt: 1.0,
            v_max: 5.0,
            uav_uav_range: 500.0,
            covering_range: 250.0,
            goal_radius: 10.0,
        }
    }
}

impl WorldConfig {
    pub fn n_uavs(&self) -> usize {
        self.uav_starts.len()
    }

    pub fn limits(&self) -> FlightLimits {
        FlightLimits {
            z_min: self.z_min,
            z_max: self.z_max,
            v_max: self.v_max,
        }
    }

    /// Start position after pulling the altitude into `[z_min, z_max]`.
    pub fn start(&self, i: usize) -> Vec3 {
        self.clamp_altitude(Vec3::from_array(self.uav_starts[i]))
    }

    pub fn goal(&self, i: usize) -> Vec3 {
        self.clamp_altitude(Vec3::from_array(self.uav_goals[i]))
    }

    fn clamp_altitude(&self, mut p: Vec3) -> Vec3 {
        p.z = p.z.clamp(self.z_min, self.z_max);
        p
    }

    pub fn in_area(&self, x: f64, y: f64) -> bool {
        (0.0..=self.area_size).contains(&x) && (0.0..=self.area_size).contains(&y)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("world.area_size", self.area_size),
            ("world.dt", self.dt),
            ("world.v_max", self.v_max),
            ("world.uav_uav_range", self.uav_uav_range),
            ("world.covering_range", self.covering_range),
            ("world.goal_radius", self.goal_radius),
        ];
        for (key, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(config_err(key, format!("must be finite and > 0, got {v}")));
            }
        }
        if !(self.z_min.is_finite() && self.z_max.is_finite() && self.z_min >= 0.0) {
            return Err(config_err("world.z_min", "altitude limits must be finite and >= 0"));
        }
        if self.z_min >= self.z_max {
            return Err(config_err(
                "world.z_min",
                format!("z_min ({}) must be below z_max ({})", self.z_min, self.z_max),
            ));
        }
        if self.horizon == 0 {
            return Err(config_err("world.horizon", "must be > 0"));
        }
        if self.n_users == 0 {
            return Err(config_err("world.n_users", "must be > 0"));
        }
        if self.uav_starts.is_empty() {
            return Err(config_err("world.uav_starts", "at least one UAV is required"));
        }
        if self.uav_starts.len() != self.uav_goals.len() {
            return Err(config_err(
                "world.uav_goals",
                format!(
                    "{} goals for {} starts",
                    self.uav_goals.len(),
                    self.uav_starts.len()
                ),
            ));
        }
        if !(self.user_speed_min >= 0.0 && self.user_speed_min <= self.user_speed_max)
            || !self.user_speed_max.is_finite()
        {
            return Err(config_err(
                "world.user_speed_min",
                "need 0 <= user_speed_min <= user_speed_max",
            ));
        }
        if !(self.user_direction_jitter >= 0.0 && self.user_direction_jitter.is_finite()) {
            return Err(config_err("world.user_direction_jitter", "must be finite and >= 0"));
        }
        if !(self.start_margin >= 0.0 && self.start_margin.is_finite()) {
            return Err(config_err("world.start_margin", "must be finite and >= 0"));
        }
        let lo = -self.start_margin;
        let hi = self.area_size + self.start_margin;
        for (key, points) in [("world.uav_starts", &self.uav_starts), ("world.uav_goals", &self.uav_goals)] {
            for p in points {
                if !p.iter().all(|v| v.is_finite()) {
                    return Err(config_err(key, "non-finite coordinate"));
                }
                if !(lo..=hi).contains(&p[0]) || !(lo..=hi).contains(&p[1]) {
                    return Err(config_err(
                        key,
                        format!("({}, {}) lies outside the mission area", p[0], p[1]),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Advances one UAV by one slot of Euler integration.
///
/// Altitude is clamped into `[z_min, z_max]`; the returned flag reports
/// whether the clamp fired.
pub fn step_uav(
    state: &UavState,
    commanded_velocity: Vec3,
    dt: f64,
    limits: &FlightLimits,
) -> Result<(UavState, bool)> {
    if !commanded_velocity.is_finite() || !state.position.is_finite() || !dt.is_finite() {
        return Err(Error::NonFinite("step_uav input"));
    }
    let speed = commanded_velocity.norm();
    if speed > limits.v_max * (1.0 + 1e-12) {
        return Err(Error::InvalidArgument(format!(
            "commanded speed {speed} exceeds v_max {}",
            limits.v_max
        )));
    }
    let mut position = state.position + commanded_velocity * dt;
    let clamped = position.z < limits.z_min || position.z > limits.z_max;
    position.z = position.z.clamp(limits.z_min, limits.z_max);
    let heading = if commanded_velocity.horizontal_norm() > 0.0 {
        commanded_velocity.y.atan2(commanded_velocity.x)
    } else {
        state.heading
    };
    Ok((
        UavState {
            position,
            velocity: commanded_velocity,
            heading,
            ..*state
        },
        clamped,
    ))
}

/// Folds a coordinate back into `[0, size]`, returning whether the
/// direction along this axis flipped.
fn reflect(mut v: f64, size: f64) -> (f64, bool) {
    let mut flipped = false;
    loop {
        if v > size {
            v = 2.0 * size - v;
        } else if v < 0.0 {
            v = -v;
        } else {
            return (v, flipped);
        }
        flipped = !flipped;
    }
}

/// Moves users straight along their direction, bouncing off the area walls,
/// then perturbs each direction by a uniform jitter in `[-jitter, jitter]`.
pub fn step_users(
    users: &[GroundUser],
    area_size: f64,
    dt: f64,
    jitter: f64,
    rng: &mut Rng,
) -> Vec<GroundUser> {
    users
        .iter()
        .map(|u| {
            let (x, flip_x) = reflect(u.x + u.speed * u.direction.cos() * dt, area_size);
            let (y, flip_y) = reflect(u.y + u.speed * u.direction.sin() * dt, area_size);
            let mut direction = u.direction;
            if flip_x {
                direction = PI - direction;
            }
            if flip_y {
                direction = -direction;
            }
            if jitter > 0.0 {
                direction += rng.random_range(-jitter..=jitter);
            }
            GroundUser {
                x,
                y,
                speed: u.speed,
                direction: direction.rem_euclid(TAU),
            }
        })
        .collect()
}

/// Places `n` users uniformly over the area with uniform speeds and
/// directions.
pub fn spawn_users(config: &WorldConfig, rng: &mut Rng) -> Vec<GroundUser> {
    (0..config.n_users)
        .map(|_| GroundUser {
            x: rng.random_range(0.0..=config.area_size),
            y: rng.random_range(0.0..=config.area_size),
            speed: if config.user_speed_max > config.user_speed_min {
                rng.random_range(config.user_speed_min..config.user_speed_max)
            } else {
                config.user_speed_min
            },
            direction: rng.random_range(0.0..TAU),
        })
        .collect()
}

/// Signed heading change per second, with the difference wrapped into
/// `(-π, π]`.
pub fn turn_rate(heading_prev: f64, heading_now: f64, dt: f64) -> f64 {
    let mut d = (heading_now - heading_prev).rem_euclid(TAU);
    if d > PI {
        d -= TAU;
    }
    d / dt
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn uav_at(p: Vec3) -> UavState {
        UavState {
            position: p,
            velocity: Vec3::ZERO,
            heading: 0.0,
            energy: 1e5,
            goal: Vec3::ZERO,
        }
    }

    const LIMITS: FlightLimits = FlightLimits {
        z_min: 10.0,
        z_max: 100.0,
        v_max: 5.0,
    };

    #[test]
    fn zero_motion_is_identity() {
        let s = uav_at(Vec3::new(0.0, 0.0, 50.0));
        let (n, clamped) = step_uav(&s, Vec3::ZERO, 1.0, &LIMITS).unwrap();
        assert_eq!(n.position, s.position);
        assert_eq!(n.heading, s.heading);
        assert!(!clamped);
    }

    #[test]
    fn climb_past_ceiling_clamps() {
        let s = uav_at(Vec3::new(0.0, 0.0, 95.0));
        let limits = FlightLimits { v_max: 10.0, ..LIMITS };
        let (n, clamped) = step_uav(&s, Vec3::new(0.0, 0.0, 10.0), 1.0, &limits).unwrap();
        assert_eq!(n.position.z, 100.0);
        assert!(clamped);
    }

    #[test]
    fn euler_step() {
        let s = uav_at(Vec3::new(12.0, 22.0, 25.0));
        let (n, clamped) = step_uav(&s, Vec3::new(2.0, 1.0, 0.5), 1.0, &LIMITS).unwrap();
        assert_eq!(n.position, Vec3::new(14.0, 23.0, 25.5));
        assert!(!clamped);
        assert_abs_diff_eq!(n.heading, 0.5f64.atan(), epsilon = 1e-15);
    }

    #[test]
    fn rejects_bad_input() {
        let s = uav_at(Vec3::new(0.0, 0.0, 50.0));
        assert!(matches!(
            step_uav(&s, Vec3::new(f64::NAN, 0.0, 0.0), 1.0, &LIMITS),
            Err(Error::NonFinite(_))
        ));
        assert!(step_uav(&s, Vec3::new(6.0, 0.0, 0.0), 1.0, &LIMITS).is_err());
    }

    #[test]
    fn users_move_and_reflect() {
        let mut rng = stream(0, Stream::Users);
        let still = GroundUser { x: 100.0, y: 100.0, speed: 0.0, direction: 1.0 };
        let wall = GroundUser { x: 199.0, y: 100.0, speed: 2.0, direction: 0.0 };
        let north = GroundUser { x: 50.0, y: 50.0, speed: 1.0, direction: PI / 2.0 };
        let out = step_users(&[still, wall, north], 200.0, 1.0, 0.0, &mut rng);
        assert_eq!((out[0].x, out[0].y), (100.0, 100.0));
        assert_abs_diff_eq!(out[1].x, 199.0, epsilon = 1e-12);
        assert_abs_diff_eq!(out[1].direction, PI, epsilon = 1e-12);
        assert_abs_diff_eq!(out[2].x, 50.0, epsilon = 1e-12);
        assert_abs_diff_eq!(out[2].y, 51.0, epsilon = 1e-12);
    }

    #[test]
    fn turn_rate_examples() {
        assert_eq!(turn_rate(0.0, 0.0, 1.0), 0.0);
        assert_abs_diff_eq!(turn_rate(0.1, -0.1, 1.0), -0.2, epsilon = 1e-12);
        assert_abs_diff_eq!(turn_rate(3.1, -3.1, 1.0), TAU - 6.2, epsilon = 1e-12);
        assert_abs_diff_eq!(turn_rate(0.0, PI, 2.0), PI / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn default_config_validates_and_clamps_low_start() {
        let c = WorldConfig::default();
        c.validate().unwrap();
        assert_eq!(c.start(1).z, 10.0);
        assert_eq!(c.goal(1).z, 10.0);
        let mut bad = c.clone();
        bad.z_min = 200.0;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn long_random_walk_stays_inside() {
        let mut rng = stream(11, Stream::Users);
        let config = WorldConfig { user_speed_max: 30.0, ..Default::default() };
        let mut users = spawn_users(&config, &mut rng);
        for _ in 0..10_000 {
            users = step_users(&users, 200.0, 1.0, 0.1, &mut rng);
            for u in &users {
                assert!(config.in_area(u.x, u.y), "{u:?}");
            }
        }
    }

    proptest! {
        #[test]
        fn altitude_always_within_limits(
            z in 10.0f64..100.0,
            (vx, vy, vz) in (-3.0f64..3.0, -3.0f64..3.0, -2.8f64..2.8),
        ) {
            let s = uav_at(Vec3::new(0.0, 0.0, z));
            let (n, _) = step_uav(&s, Vec3::new(vx, vy, vz), 1.0, &LIMITS).unwrap();
            prop_assert!((10.0..=100.0).contains(&n.position.z));
        }

        #[test]
        fn turn_rate_range(a in -20.0f64..20.0, b in -20.0f64..20.0, dt in 0.1f64..5.0) {
            let r = turn_rate(a, b, dt);
            prop_assert!(r > -PI / dt - 1e-12 && r <= PI / dt + 1e-12);
        }
    }
}
