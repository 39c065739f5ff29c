//! Fairness, energy efficiency and per-episode traces.

mod compare;

pub use compare::{
    compare_policies, rows_to_csv, summarize, summary_to_csv, ComparisonRow, ComparisonSummary,
    PolicySet,
};

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Jain's fairness index `(Σv)² / (n·Σv²)`.
///
/// An all-zero vector counts as perfectly equal and yields 1.
pub fn jain_index(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("jain_index of an empty list".into()));
    }
    if let Some(v) = values.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "jain_index needs finite nonnegative values, got {v}"
        )));
    }
    let sum: f64 = values.iter().sum();
    let sum_sq: f64 = values.iter().map(|v| v * v).sum();
    if sum_sq == 0.0 {
        log::warn!("jain_index over an all-zero vector; reporting 1");
        return Ok(1.0);
    }
    Ok((sum * sum / (values.len() as f64 * sum_sq)).min(1.0))
}

/// How episode energy efficiency is composed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EfficiencyMode {
    /// Fairness index × normalized throughput / normalized energy.
    #[default]
    FairThroughput,
    /// Normalized throughput / normalized energy.
    Throughput,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    pub efficiency: EfficiencyMode,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            efficiency: EfficiencyMode::FairThroughput,
        }
    }
}

impl MetricsConfig {
    pub fn validate(&self) -> Result<()> {
        Ok(())
    }
}

/// One UAV's entry in a trace row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UavSample {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub heading: f64,
    pub turn_rate: f64,
    pub energy: f64,
}

/// State of the mission at the end of one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotRow {
    /// 1-based slot index.
    pub t: usize,
    pub uavs: Vec<UavSample>,
    /// bits/s per user
    pub user_throughput: Vec<f64>,
    pub reward: f64,
    pub connected: bool,
    /// At least one UAV had its altitude clamped this slot.
    pub clamped: bool,
}

/// Episode-level totals.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Aggregates {
    pub total_reward: f64,
    /// Propulsion energy consumed by all UAVs, J.
    pub total_energy: f64,
    /// Jain index of the users' accumulated throughput.
    pub fairness: f64,
    /// Bits delivered to all users.
    pub total_throughput: f64,
    pub energy_efficiency: f64,
}

/// Per-slot trace of one episode together with its aggregates.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub rows: Vec<SlotRow>,
    /// Battery level of each UAV before the first slot, J.
    pub initial_energy: Vec<f64>,
    pub dt: f64,
    /// Throughput normalizer, bits/s.
    pub reference_rate: f64,
    /// Energy normalizer, J.
    pub battery_capacity: f64,
    pub efficiency: EfficiencyMode,
    pub aggregates: Aggregates,
}

impl EpisodeRecord {
    pub fn new(
        initial_energy: Vec<f64>,
        dt: f64,
        reference_rate: f64,
        battery_capacity: f64,
        efficiency: EfficiencyMode,
    ) -> Self {
        Self {
            rows: Vec::new(),
            initial_energy,
            dt,
            reference_rate,
            battery_capacity,
            efficiency,
            aggregates: Aggregates::default(),
        }
    }

    /// Appends a row, folding the consumed energy into the running totals.
    pub fn push(&mut self, row: SlotRow, slot_energy: f64) -> Result<()> {
        let agg = &mut self.aggregates;
        agg.total_reward += row.reward;
        agg.total_energy += slot_energy;
        agg.total_throughput += row.user_throughput.iter().sum::<f64>() * self.dt;
        self.rows.push(row);
        self.aggregates.fairness = jain_index(&self.user_totals())?;
        self.aggregates.energy_efficiency = self.efficiency_from(&self.aggregates);
        Ok(())
    }

    /// Accumulated bits per user.
    pub fn user_totals(&self) -> Vec<f64> {
        let n = self.rows.first().map_or(0, |r| r.user_throughput.len());
        let mut totals = vec![0.0; n];
        for row in &self.rows {
            for (acc, t) in totals.iter_mut().zip(&row.user_throughput) {
                *acc += t * self.dt;
            }
        }
        totals
    }

    fn efficiency_from(&self, agg: &Aggregates) -> f64 {
        if agg.total_energy <= 0.0 {
            return 0.0;
        }
        let throughput = agg.total_throughput / (self.reference_rate * self.dt);
        let energy = agg.total_energy / self.battery_capacity;
        match self.efficiency {
            EfficiencyMode::FairThroughput => agg.fairness * throughput / energy,
            EfficiencyMode::Throughput => throughput / energy,
        }
    }

    /// Aggregates rebuilt from the rows alone; energy comes from the
    /// battery difference between the start and the last row.
    pub fn recompute(&self) -> Result<Aggregates> {
        let total_reward = self.rows.iter().map(|r| r.reward).sum();
        let total_energy = match self.rows.last() {
            Some(last) => self
                .initial_energy
                .iter()
                .zip(&last.uavs)
                .map(|(e0, u)| e0 - u.energy)
                .sum(),
            None => 0.0,
        };
        let totals = self.user_totals();
        let total_throughput = totals.iter().sum();
        let fairness = if totals.is_empty() { 1.0 } else { jain_index(&totals)? };
        let mut agg = Aggregates {
            total_reward,
            total_energy,
            fairness,
            total_throughput,
            energy_efficiency: 0.0,
        };
        agg.energy_efficiency = self.efficiency_from(&agg);
        Ok(agg)
    }

    /// Checks the stored aggregates against a recomputation from the rows.
    pub fn verify(&self, rel_tol: f64) -> Result<()> {
        let again = self.recompute()?;
        let a = &self.aggregates;
        let pairs = [
            ("total_reward", a.total_reward, again.total_reward),
            ("total_energy", a.total_energy, again.total_energy),
            ("fairness", a.fairness, again.fairness),
            ("total_throughput", a.total_throughput, again.total_throughput),
            ("energy_efficiency", a.energy_efficiency, again.energy_efficiency),
        ];
        for (name, stored, fresh) in pairs {
            let scale = stored.abs().max(fresh.abs()).max(1e-300);
            if (stored - fresh).abs() > rel_tol * scale && (stored - fresh).abs() > 1e-12 {
                return Err(Error::InvalidArgument(format!(
                    "aggregate {name} drifted: stored {stored}, recomputed {fresh}"
                )));
            }
        }
        Ok(())
    }

    /// Energy efficiency of the episode. Fails when no energy was spent.
    pub fn energy_efficiency(&self) -> Result<f64> {
        if !(self.aggregates.total_energy > 0.0) {
            return Err(Error::InvalidArgument(
                "energy efficiency undefined for an episode that consumed no energy".into(),
            ));
        }
        Ok(self.aggregates.energy_efficiency)
    }

    pub fn n_uavs(&self) -> usize {
        self.initial_energy.len()
    }

    /// Header of `trace.csv` for the given fleet and user counts.
    pub fn csv_header(n_uavs: usize, n_users: usize) -> String {
        let mut cols = vec!["t".to_string()];
        for i in 0..n_uavs {
            for f in ["x", "y", "z", "heading", "turn_rate", "energy"] {
                cols.push(format!("uav{i}_{f}"));
            }
        }
        for j in 0..n_users {
            cols.push(format!("user{j}_throughput"));
        }
        cols.extend(["reward", "connected", "clamped"].map(String::from));
        cols.join(",")
    }

    /// Renders the trace as CSV (LF line endings, header included).
    pub fn to_csv(&self, n_users: usize) -> String {
        let mut out = Self::csv_header(self.n_uavs(), n_users);
        out.push('\n');
        for row in &self.rows {
            let _ = write!(out, "{}", row.t);
            for u in &row.uavs {
                let _ = write!(
                    out,
                    ",{},{},{},{},{},{}",
                    u.x, u.y, u.z, u.heading, u.turn_rate, u.energy
                );
            }
            for t in &row.user_throughput {
                let _ = write!(out, ",{t}");
            }
            let _ = writeln!(
                out,
                ",{},{},{}",
                row.reward, row.connected as u8, row.clamped as u8
            );
        }
        out
    }
}
