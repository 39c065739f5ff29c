//! Linear propulsion energy and battery accounting.

use serde::{Deserialize, Serialize};

use crate::error::{config_err, Error, Result};
use crate::world::UavState;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyConfig {
    /// Energy spent hovering for one slot, J.
    pub hover_cost: f64,
    /// Additional energy per meter flown, J/m.
    pub move_cost: f64,
    /// Full battery, J.
    pub battery_capacity: f64,
}

impl Default for EnergyConfig {
    fn default() -> Self {
        Self {
            hover_cost: 100.0,
            move_cost: 50.0,
            battery_capacity: 1e5,
        }
    }
}

impl EnergyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.hover_cost >= 0.0 && self.hover_cost.is_finite()) {
            return Err(config_err("energy.hover_cost", "must be finite and >= 0"));
        }
        if !(self.move_cost > 0.0 && self.move_cost.is_finite()) {
            return Err(config_err("energy.move_cost", "must be finite and > 0"));
        }
        if !(self.battery_capacity > 0.0 && self.battery_capacity.is_finite()) {
            return Err(config_err("energy.battery_capacity", "must be finite and > 0"));
        }
        Ok(())
    }

    /// Energy demanded by one slot in which the UAV flies `distance` meters.
    pub fn slot_energy(&self, distance: f64) -> Result<f64> {
        if !(distance >= 0.0) || !distance.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "flight distance must be finite and >= 0, got {distance}"
            )));
        }
        Ok(self.hover_cost + self.move_cost * distance)
    }

    /// Charges one slot to the battery. The flag is set when the slot asked
    /// for more energy than was left.
    pub fn drain(&self, state: &UavState, distance: f64) -> Result<(UavState, bool)> {
        let demand = self.slot_energy(distance)?;
        let depleted = demand > state.energy;
        let energy = (state.energy - demand).max(0.0);
        Ok((UavState { energy, ..*state }, depleted))
    }
}
