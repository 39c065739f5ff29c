//! Air-to-ground link model.
//!
//! Pathloss is free-space loss plus an excess loss that mixes a LoS and an
//! NLoS term with an elevation-dependent sigmoid LoS probability. Rates use
//! the Shannon form over one frequency band.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{config_err, Error, Result};
use crate::rng::Rng;
use crate::world::Vec3;

const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelConfig {
    /// Hz
    pub carrier_frequency: f64,
    /// Excess loss on LoS links, dB.
    pub los_excess_loss: f64,
    /// Excess loss on NLoS links, dB.
    pub nlos_excess_loss: f64,
    /// Sigmoid constant `a` of the LoS probability.
    pub los_a: f64,
    /// Sigmoid constant `b` of the LoS probability.
    pub los_b: f64,
    /// dBm
    pub tx_power: f64,
    /// dBm
    pub noise_power: f64,
    /// Bandwidth of one band, Hz.
    pub bandwidth: f64,
    /// Number of orthogonal bands UAVs can pick from.
    pub n_bands: usize,
    /// Draw LoS/NLoS per link and slot instead of using the expected loss.
    pub stochastic_los: bool,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            carrier_frequency: 2e9,
            los_excess_loss: 1.0,
            nlos_excess_loss: 20.0,
            los_a: 9.61,
            los_b: 0.16,
            tx_power: 20.0,
            noise_power: -104.0,
            bandwidth: 1e6,
            n_bands: 2,
            stochastic_los: false,
        }
    }
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.carrier_frequency.is_finite() && self.carrier_frequency > 0.0) {
            return Err(config_err("channel.carrier_frequency", "must be > 0"));
        }
        if !(self.los_excess_loss >= 0.0 && self.nlos_excess_loss > self.los_excess_loss) {
            return Err(config_err(
                "channel.nlos_excess_loss",
                "need nlos_excess_loss > los_excess_loss >= 0",
            ));
        }
        if !(self.los_a > 0.0 && self.los_a.is_finite()) {
            return Err(config_err("channel.los_a", "must be > 0"));
        }
        if !(self.los_b > 0.0 && self.los_b.is_finite()) {
            return Err(config_err("channel.los_b", "must be > 0"));
        }
        if !(self.bandwidth > 0.0 && self.bandwidth.is_finite()) {
            return Err(config_err("channel.bandwidth", "must be > 0"));
        }
        if !(self.tx_power.is_finite() && self.noise_power.is_finite()) {
            return Err(config_err("channel.tx_power", "powers must be finite"));
        }
        if self.n_bands == 0 {
            return Err(config_err("channel.n_bands", "must be > 0"));
        }
        Ok(())
    }

    /// LoS probability at an elevation angle given in radians.
    pub fn los_probability(&self, elevation: f64) -> Result<f64> {
        if !(0.0..=FRAC_PI_2 + 1e-12).contains(&elevation) {
            return Err(Error::InvalidArgument(format!(
                "elevation angle {elevation} outside [0, π/2]"
            )));
        }
        let deg = elevation * 180.0 / PI;
        Ok(1.0 / (1.0 + self.los_a * (-self.los_b * (deg - self.los_a)).exp()))
    }

    pub fn free_space_loss(&self, distance: f64) -> f64 {
        20.0 * (4.0 * PI * self.carrier_frequency * distance / SPEED_OF_LIGHT).log10()
    }

    /// Probability-weighted pathloss between a UAV and a ground point, dB.
    pub fn expected_pathloss(&self, uav: Vec3, user: [f64; 2]) -> Result<f64> {
        let (distance, elevation) = geometry(uav, user)?;
        let p = self.los_probability(elevation)?;
        Ok(self.free_space_loss(distance)
            + p * self.los_excess_loss
            + (1.0 - p) * self.nlos_excess_loss)
    }

    /// Pathloss with the LoS state drawn at random, dB.
    pub fn sampled_pathloss(&self, uav: Vec3, user: [f64; 2], rng: &mut Rng) -> Result<f64> {
        let (distance, elevation) = geometry(uav, user)?;
        let p = self.los_probability(elevation)?;
        let excess = if rng.random::<f64>() < p {
            self.los_excess_loss
        } else {
            self.nlos_excess_loss
        };
        Ok(self.free_space_loss(distance) + excess)
    }

    /// Shannon rate over one full band for a given pathloss, bits/s.
    pub fn rate_for_pathloss(&self, pathloss_db: f64) -> f64 {
        let snr = 10f64.powf((self.tx_power - pathloss_db - self.noise_power) / 10.0);
        self.bandwidth * (1.0 + snr).log2()
    }

    /// Expected-loss Shannon rate from a UAV to a ground user, bits/s.
    pub fn throughput(&self, uav: Vec3, user: [f64; 2]) -> Result<f64> {
        Ok(self.rate_for_pathloss(self.expected_pathloss(uav, user)?))
    }
}

/// Slant distance and elevation angle from a ground point up to a UAV.
fn geometry(uav: Vec3, user: [f64; 2]) -> Result<(f64, f64)> {
    if !uav.is_finite() || !user[0].is_finite() || !user[1].is_finite() {
        return Err(Error::NonFinite("link geometry"));
    }
    let horizontal = (uav.x - user[0]).hypot(uav.y - user[1]);
    let height = uav.z.max(0.0);
    let distance = horizontal.hypot(height);
    if distance <= 0.0 {
        return Err(Error::InvalidArgument(
            "UAV and user coincide; pathloss undefined at zero distance".into(),
        ));
    }
    Ok((distance, height.atan2(horizontal)))
}

/// Radius of the ground disc a UAV at `altitude` can serve.
pub fn covering_radius(altitude: f64, covering_range: f64) -> f64 {
    (covering_range * covering_range - altitude * altitude)
        .max(0.0)
        .sqrt()
}

/// Whether the UAV graph with edges between UAVs at most `range` apart is
/// connected.
pub fn uavs_connected(positions: &[Vec3], range: f64) -> bool {
    if positions.len() <= 1 {
        return true;
    }
    let mut seen = vec![false; positions.len()];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(i) = stack.pop() {
        for j in 0..positions.len() {
            if !seen[j] && positions[i].distance(positions[j]) <= range {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn cfg() -> ChannelConfig {
        ChannelConfig::default()
    }

    #[test]
    fn los_probability_values() {
        let c = cfg();
        // 1 / (1 + 9.61 exp(-0.16 * 80.39))
        let top = 1.0 / (1.0 + 9.61 * (-0.16f64 * 80.39).exp());
        assert_abs_diff_eq!(c.los_probability(FRAC_PI_2).unwrap(), top, epsilon = 1e-12);
        assert_abs_diff_eq!(top, 0.99997, epsilon = 1e-5);
        assert_abs_diff_eq!(c.los_probability(0.0).unwrap(), 0.0219, epsilon = 1e-4);
        let p60 = c.los_probability(60f64.to_radians()).unwrap();
        let p10 = c.los_probability(10f64.to_radians()).unwrap();
        assert!(p60 > p10);
        assert!(c.los_probability(-0.1).is_err());
        assert!(c.los_probability(2.0).is_err());
    }

    #[test]
    fn free_space_loss_values() {
        let c = cfg();
        assert_abs_diff_eq!(c.free_space_loss(100.0), 78.5, epsilon = 0.05);
        assert_abs_diff_eq!(
            c.free_space_loss(200.0) - c.free_space_loss(100.0),
            20.0 * 2f64.log10(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn overhead_loss_grows_with_height() {
        let c = cfg();
        let low = c.expected_pathloss(Vec3::new(0.0, 0.0, 100.0), [0.0, 0.0]).unwrap();
        let high = c.expected_pathloss(Vec3::new(0.0, 0.0, 200.0), [0.0, 0.0]).unwrap();
        assert!(high > low);
        assert!(c.expected_pathloss(Vec3::new(3.0, 4.0, 0.0), [3.0, 4.0]).is_err());
    }

    #[test]
    fn shannon_rate_anchors() {
        let c = ChannelConfig { tx_power: 0.0, noise_power: 0.0, ..cfg() };
        // SNR = 1 when the loss is 0 dB and tx equals noise
        assert_abs_diff_eq!(c.rate_for_pathloss(0.0), 1e6, epsilon = 1e-6);
        assert!(c.rate_for_pathloss(400.0) < 1e-20);
    }

    #[test]
    fn throughput_matches_scalar_pipeline() {
        // Independent evaluation of the three formulas for a user 50 m away
        // horizontally from a UAV at 50 m.
        let d = (50.0f64 * 50.0 + 50.0 * 50.0).sqrt();
        let theta_deg = 45.0;
        let p = 1.0 / (1.0 + 9.61 * (-0.16f64 * (theta_deg - 9.61)).exp());
        let fspl = 20.0 * (4.0 * PI * 2e9 * d / 299_792_458.0).log10();
        let loss = fspl + p * 1.0 + (1.0 - p) * 20.0;
        let snr = 10f64.powf((20.0 - loss + 104.0) / 10.0);
        let expected = 1e6 * (1.0 + snr).log2();
        let got = cfg().throughput(Vec3::new(50.0, 0.0, 50.0), [0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(got, expected, epsilon = 1e-6);
    }

    #[test]
    fn covering_radius_values() {
        assert_eq!(covering_radius(0.0, 250.0), 250.0);
        assert_eq!(covering_radius(250.0, 250.0), 0.0);
        assert_eq!(covering_radius(300.0, 250.0), 0.0);
        assert_abs_diff_eq!(covering_radius(150.0, 250.0), 200.0, epsilon = 1e-12);
    }

    #[test]
    fn connectivity() {
        let a = Vec3::new(0.0, 0.0, 50.0);
        assert!(uavs_connected(&[a], 1.0));
        assert!(uavs_connected(&[a, Vec3::new(300.0, 400.0, 50.0)], 500.0));
        assert!(!uavs_connected(&[a, Vec3::new(300.0, 400.0, 50.0)], 499.0));
        // chain a - b - c is connected although a and c are out of range
        let chain = [a, Vec3::new(100.0, 0.0, 50.0), Vec3::new(200.0, 0.0, 50.0)];
        assert!(uavs_connected(&chain, 100.0));
        assert!(!uavs_connected(&chain, 99.0));
    }

    proptest! {
        #[test]
        fn los_probability_monotone(a in 0.0f64..FRAC_PI_2, b in 0.0f64..FRAC_PI_2) {
            let c = cfg();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let (pl, ph) = (c.los_probability(lo).unwrap(), c.los_probability(hi).unwrap());
            prop_assert!((0.0..=1.0).contains(&pl) && (0.0..=1.0).contains(&ph));
            prop_assert!(pl <= ph);
        }

        #[test]
        fn pathloss_increases_along_ray(
            theta in 0.01f64..1.5,
            r in 1.0f64..500.0,
            k in 1.001f64..4.0,
        ) {
            let c = cfg();
            let near = Vec3::new(r * theta.cos(), 0.0, r * theta.sin());
            let far = Vec3::new(k * r * theta.cos(), 0.0, k * r * theta.sin());
            let ln = c.expected_pathloss(near, [0.0, 0.0]).unwrap();
            let lf = c.expected_pathloss(far, [0.0, 0.0]).unwrap();
            prop_assert!(lf > ln);
            prop_assert!(c.rate_for_pathloss(lf) <= c.rate_for_pathloss(ln));
            prop_assert!(c.rate_for_pathloss(lf) >= 0.0);
        }

        #[test]
        fn covering_radius_bounded(h in 0.0f64..1000.0, r in 0.0f64..1000.0) {
            prop_assert!(covering_radius(h, r) <= r);
        }
    }
}
