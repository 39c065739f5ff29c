//! Side-by-side evaluation of several policies over a sweep of covering
//! ranges and seeds.

use crate::baselines::BaselineConfig;
use crate::env::{Env, EnvConfig};
use crate::error::{Error, Result};
use crate::rollout::{run_episode, Policy};

/// Policies under one label, one instance per evaluation seed.
#[derive(Debug, Clone)]
pub struct PolicySet {
    pub label: String,
    pub per_seed: Vec<Policy>,
}

/// Outcome of one evaluation episode.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub policy: String,
    pub range_m: f64,
    pub seed: u64,
    pub ee: f64,
    pub fairness: f64,
}

/// Mean and sample standard deviation over seeds for one
/// (policy, covering range) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonSummary {
    pub policy: String,
    pub range_m: f64,
    pub n: usize,
    pub ee_mean: f64,
    pub ee_std: f64,
    pub fairness_mean: f64,
    pub fairness_std: f64,
}

/// Evaluates every policy set at every covering range, one greedy episode
/// per seed. `seeds[k]` is evaluated with `per_seed[k]`.
pub fn compare_policies(
    env_config: &EnvConfig,
    baseline: &BaselineConfig,
    policies: &[PolicySet],
    ranges: &[f64],
    seeds: &[u64],
) -> Result<Vec<ComparisonRow>> {
    let mut rows = Vec::with_capacity(policies.len() * ranges.len() * seeds.len());
    for set in policies {
        if set.per_seed.len() != seeds.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} policies for {}", seeds.len(), set.label),
                found: format!("{}", set.per_seed.len()),
            });
        }
        for &range in ranges {
            let mut config = env_config.clone();
            config.world.covering_range = range;
            let mut env = Env::new(config)?;
            for (policy, &seed) in set.per_seed.iter().zip(seeds) {
                let record = run_episode(&mut env, policy, baseline, seed)?;
                rows.push(ComparisonRow {
                    policy: set.label.clone(),
                    range_m: range,
                    seed,
                    ee: record.energy_efficiency()?,
                    fairness: record.aggregates.fairness,
                });
            }
        }
    }
    Ok(rows)
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Groups rows by (policy, range) in first-seen order.
pub fn summarize(rows: &[ComparisonRow]) -> Vec<ComparisonSummary> {
    let mut keys: Vec<(&str, f64)> = Vec::new();
    for r in rows {
        if !keys.iter().any(|(p, x)| *p == r.policy && *x == r.range_m) {
            keys.push((&r.policy, r.range_m));
        }
    }
    keys.into_iter()
        .map(|(policy, range_m)| {
            let group: Vec<&ComparisonRow> = rows
                .iter()
                .filter(|r| r.policy == policy && r.range_m == range_m)
                .collect();
            let ee: Vec<f64> = group.iter().map(|r| r.ee).collect();
            let fairness: Vec<f64> = group.iter().map(|r| r.fairness).collect();
            let (ee_mean, ee_std) = mean_std(&ee);
            let (fairness_mean, fairness_std) = mean_std(&fairness);
            ComparisonSummary {
                policy: policy.to_string(),
                range_m,
                n: group.len(),
                ee_mean,
                ee_std,
                fairness_mean,
                fairness_std,
            }
        })
        .collect()
}

pub fn rows_to_csv(rows: &[ComparisonRow]) -> String {
    let mut out = String::from("policy,range_m,seed,ee,fairness\n");
    for r in rows {
        out.push_str(&format!("{},{},{},{},{}\n", r.policy, r.range_m, r.seed, r.ee, r.fairness));
    }
    out
}

pub fn summary_to_csv(summary: &[ComparisonSummary]) -> String {
    let mut out = String::from("policy,range_m,n,ee_mean,ee_std,fairness_mean,fairness_std\n");
    for s in summary {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            s.policy, s.range_m, s.n, s.ee_mean, s.ee_std, s.fairness_mean, s.fairness_std
        ));
    }
    out
}
