//! Run configuration: one TOML file with a section per subsystem.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::agent::AgentConfig;
use crate::baselines::BaselineConfig;
use crate::channel::ChannelConfig;
use crate::energy::EnergyConfig;
use crate::env::{EnvConfig, RewardConfig};
use crate::error::{config_err, Result};
use crate::metrics::MetricsConfig;
use crate::world::WorldConfig;

/// Covering ranges and seeds swept by the policy comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareConfig {
    /// Covering ranges in meters.
    pub ranges: Vec<f64>,
    pub seeds: Vec<u64>,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self {
            ranges: (0..7).map(|k| 100.0 + 50.0 * k as f64).collect(),
            seeds: vec![1, 2, 3, 4, 5],
        }
    }
}

impl CompareConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ranges.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(config_err("compare.ranges", "every range must be finite and > 0"));
        }
        Ok(())
    }
}

/// Grid of the channel inspection table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelTableConfig {
    /// Slant distances, meters.
    pub distances: Vec<f64>,
    /// Elevation angles, degrees.
    pub elevations_deg: Vec<f64>,
}

impl Default for ChannelTableConfig {
    fn default() -> Self {
        Self {
            distances: vec![10.0, 20.0, 50.0, 100.0, 200.0, 300.0, 500.0],
            elevations_deg: vec![10.0, 30.0, 45.0, 60.0, 90.0],
        }
    }
}

impl ChannelTableConfig {
    pub fn validate(&self) -> Result<()> {
        if self.distances.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
            return Err(config_err("channel_table.distances", "every distance must be > 0"));
        }
        if self.elevations_deg.iter().any(|e| !(0.0..=90.0).contains(e)) {
            return Err(config_err("channel_table.elevations_deg", "angles must lie in [0, 90]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Directory receiving every artifact of a run.
    pub out: PathBuf,
    pub world: WorldConfig,
    pub channel: ChannelConfig,
    pub energy: EnergyConfig,
    pub reward: RewardConfig,
    pub agent: AgentConfig,
    pub baseline: BaselineConfig,
    pub metrics: MetricsConfig,
    pub compare: CompareConfig,
    pub channel_table: ChannelTableConfig,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: RunConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| config_err("config", e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.env_config().validate()?;
        self.agent.validate()?;
        self.baseline.validate()?;
        self.metrics.validate()?;
        self.compare.validate()?;
        self.channel_table.validate()
    }

    pub fn env_config(&self) -> EnvConfig {
        EnvConfig {
            world: self.world.clone(),
            channel: self.channel.clone(),
            energy: self.energy.clone(),
            reward: self.reward.clone(),
            efficiency: self.metrics.efficiency,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Error;

    #[test]
    fn round_trip() {
        let mut c = RunConfig::default();
        c.seed = 17;
        c.out = "runs/x".into();
        c.agent.hidden_layers = vec![32, 16];
        c.compare.ranges = vec![125.0];
        let text = c.to_toml_string().unwrap();
        assert_eq!(RunConfig::from_toml_str(&text).unwrap(), c);
    }

    #[test]
    fn shipped_defaults_match_code_defaults() {
        let text = include_str!("../configs/default.toml");
        let shipped = RunConfig::from_toml_str(text).unwrap();
        let mut expected = RunConfig::default();
        expected.seed = shipped.seed;
        expected.out = shipped.out.clone();
        assert_eq!(shipped, expected);
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = RunConfig::from_toml_str("[agent]\nlearning_rate = 0.1\n").unwrap_err();
        assert!(err.to_string().contains("learning_rate"), "{err}");
        assert!(RunConfig::from_toml_str("bogus = 1\n").is_err());
    }

    #[test]
    fn invalid_values_name_their_key() {
        let err = RunConfig::from_toml_str("[agent]\ngamma = 1.5\n").unwrap_err();
        assert!(matches!(&err, Error::Config { key, .. } if key == "agent.gamma"), "{err}");
        let err = RunConfig::from_toml_str("[world]\nz_min = 200.0\n").unwrap_err();
        assert!(err.to_string().contains("world."), "{err}");
    }

    #[test]
    fn default_sweep_is_on_a_fifty_meter_grid() {
        let c = CompareConfig::default();
        assert_eq!(c.ranges.first(), Some(&100.0));
        assert_eq!(c.ranges.last(), Some(&400.0));
        assert!(c.ranges.iter().all(|r| r % 50.0 == 0.0));
    }
}
