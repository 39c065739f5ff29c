//! Run orchestration behind the command-line entry points: every command
//! reads a [`RunConfig`] and writes its artifacts under `config.out`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::agent::{train_with, Agent, CurvePoint, RUNNING_MEAN_WINDOW};
use crate::baselines::tabular_q_train;
use crate::config::RunConfig;
use crate::env::{energy_indices, Env};
use crate::error::{Error, Result};
use crate::metrics::{
    compare_policies, rows_to_csv, summarize, summary_to_csv, ComparisonRow, EpisodeRecord,
    PolicySet,
};
use crate::nn::{load_checkpoint, save_checkpoint, DenseNetwork};
use crate::rng::child_seed;
use crate::rollout::{run_episode, Policy};
use crate::world::Vec3;

pub const CHECKPOINT_FILE: &str = "checkpoint.bin";
pub const CURVE_FILE: &str = "curve.csv";
pub const TRAIN_LOG_FILE: &str = "train.log";
pub const TRACE_FILE: &str = "trace.csv";
pub const COMPARE_FILE: &str = "compare.csv";
pub const COMPARE_SUMMARY_FILE: &str = "compare_summary.csv";
pub const CHANNEL_TABLE_FILE: &str = "channel_table.csv";

pub const CURVE_HEADER: &str = "episode,total_reward,running_mean,mean_q";
pub const CHANNEL_TABLE_HEADER: &str =
    "elevation_deg,distance_m,los_probability,pathloss_db,throughput_bps";

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, contents)?;
    Ok(path)
}

/// Default checkpoint location for a run directory.
pub fn default_checkpoint(config: &RunConfig) -> PathBuf {
    config.out.join(CHECKPOINT_FILE)
}

pub fn curve_to_csv(curve: &[CurvePoint]) -> String {
    let mut out = format!("{CURVE_HEADER}\n");
    for p in curve {
        let _ = writeln!(out, "{},{},{},{}", p.episode, p.total_reward, p.running_mean, p.mean_q);
    }
    out
}

/// Artifacts of a training run.
#[derive(Debug, Clone)]
pub struct TrainReport {
    pub checkpoint: PathBuf,
    pub curve_path: PathBuf,
    pub log_path: PathBuf,
    pub curve: Vec<CurvePoint>,
    /// Mean total reward over the final episodes (up to ten).
    pub final_mean: f64,
}

/// Trains the agent and writes its checkpoint, learning curve, log and
/// plot script.
pub fn cmd_train(config: &RunConfig, checkpoint: Option<&Path>) -> Result<TrainReport> {
    config.validate()?;
    let env_config = config.env_config();
    let mut log = String::new();
    let outcome = train_with(&env_config, &config.agent, config.seed, |p| {
        let _ = writeln!(
            log,
            "episode {} reward {} running_mean {} mean_q {}",
            p.episode, p.total_reward, p.running_mean, p.mean_q
        );
    })?;
    let tail: Vec<f64> = outcome
        .curve
        .iter()
        .rev()
        .take(RUNNING_MEAN_WINDOW)
        .map(|p| p.total_reward)
        .collect();
    let final_mean = if tail.is_empty() {
        0.0
    } else {
        tail.iter().sum::<f64>() / tail.len() as f64
    };
    let _ = writeln!(log, "final average reward {final_mean}");

    let checkpoint = checkpoint.map_or_else(|| default_checkpoint(config), Path::to_path_buf);
    save_checkpoint(&checkpoint, &outcome.agent.checkpoint_networks())?;
    let curve_path = write(&config.out, CURVE_FILE, &curve_to_csv(&outcome.curve))?;
    let log_path = write(&config.out, TRAIN_LOG_FILE, &log)?;
    write(&config.out, "plot_curve.py", PLOT_CURVE)?;
    Ok(TrainReport {
        checkpoint,
        curve_path,
        log_path,
        curve: outcome.curve,
        final_mean,
    })
}

/// Rebuilds an agent from a checkpoint, checking it against the configured
/// state and action widths.
pub fn load_agent(config: &RunConfig, checkpoint: &Path) -> Result<Agent> {
    let env_config = config.env_config();
    let mut networks = load_checkpoint(checkpoint)?;
    let mut take = |name: &str| -> Option<DenseNetwork> {
        let k = networks.iter().position(|(n, _)| n == name)?;
        Some(networks.remove(k).1)
    };
    let actor = take("actor").ok_or_else(|| Error::Checkpoint("no actor network".into()))?;
    let critic = take("critic").ok_or_else(|| Error::Checkpoint("no critic network".into()))?;
    let spread = take("spread");
    let spread_width = spread.as_ref().map_or(0, DenseNetwork::output_size);
    if spread_width != config.agent.spread_width {
        return Err(Error::ShapeMismatch {
            expected: format!("spread width {}", config.agent.spread_width),
            found: format!("{spread_width}"),
        });
    }
    if actor.output_size() != env_config.action_len() {
        return Err(Error::ShapeMismatch {
            expected: format!("actor output width {}", env_config.action_len()),
            found: format!("{}", actor.output_size()),
        });
    }
    Agent::from_networks(
        env_config.state_len(),
        energy_indices(env_config.world.n_uavs()),
        config.agent.clone(),
        actor,
        critic,
        spread,
    )
}

/// Flies one exploration-free episode with the checkpointed actor and
/// writes its per-slot trace.
pub fn cmd_eval(config: &RunConfig, checkpoint: &Path) -> Result<(PathBuf, EpisodeRecord)> {
    config.validate()?;
    let agent = load_agent(config, checkpoint)?;
    let mut env = Env::new(config.env_config())?;
    let record = run_episode(&mut env, &Policy::Drl(Box::new(agent)), &config.baseline, config.seed)?;
    let path = write(&config.out, TRACE_FILE, &record.to_csv(config.world.n_users))?;
    write(&config.out, "plot_trace.py", PLOT_TRACE)?;
    Ok((path, record))
}

/// Compares the checkpointed agent against both baselines over the
/// configured covering ranges and seeds.
pub fn cmd_compare(config: &RunConfig, checkpoint: &Path) -> Result<(PathBuf, Vec<ComparisonRow>)> {
    config.validate()?;
    let agent = load_agent(config, checkpoint)?;
    let env_config = config.env_config();
    let seeds = &config.compare.seeds;
    let tabular = seeds
        .iter()
        .map(|s| {
            tabular_q_train(&env_config, &config.baseline, child_seed(config.seed, *s))
                .map(|p| Policy::Tabular(Box::new(p)))
        })
        .collect::<Result<Vec<_>>>()?;
    let sets = vec![
        PolicySet {
            label: "drl".into(),
            per_seed: vec![Policy::Drl(Box::new(agent)); seeds.len()],
        },
        PolicySet {
            label: "random".into(),
            per_seed: vec![Policy::Random; seeds.len()],
        },
        PolicySet {
            label: "tabular".into(),
            per_seed: tabular,
        },
    ];
    let rows = compare_policies(&env_config, &config.baseline, &sets, &config.compare.ranges, seeds)?;
    let path = write(&config.out, COMPARE_FILE, &rows_to_csv(&rows))?;
    write(&config.out, COMPARE_SUMMARY_FILE, &summary_to_csv(&summarize(&rows)))?;
    write(&config.out, "plot_compare.py", PLOT_COMPARE)?;
    Ok((path, rows))
}

/// Renders expected pathloss and single-band throughput over the
/// configured (elevation, distance) grid.
pub fn channel_table(config: &RunConfig) -> Result<String> {
    let ch = &config.channel;
    let mut out = format!("{CHANNEL_TABLE_HEADER}\n");
    for &deg in &config.channel_table.elevations_deg {
        let theta = deg.to_radians();
        for &d in &config.channel_table.distances {
            let uav = Vec3::new(d * theta.cos(), 0.0, d * theta.sin());
            let loss = ch.expected_pathloss(uav, [0.0, 0.0])?;
            let _ = writeln!(
                out,
                "{deg},{d},{},{loss},{}",
                ch.los_probability(theta)?,
                ch.rate_for_pathloss(loss)
            );
        }
    }
    Ok(out)
}

pub fn cmd_channel_table(config: &RunConfig) -> Result<PathBuf> {
    config.validate()?;
    write(&config.out, CHANNEL_TABLE_FILE, &channel_table(config)?)
}

const PLOT_CURVE: &str = r#"# Learning curve from curve.csv.
import csv, sys
import matplotlib.pyplot as plt

rows = list(csv.DictReader(open(sys.argv[1] if len(sys.argv) > 1 else "curve.csv")))
ep = [int(r["episode"]) for r in rows]
plt.plot(ep, [float(r["total_reward"]) for r in rows], label="episode reward")
plt.plot(ep, [float(r["running_mean"]) for r in rows], label="running mean")
plt.plot(ep, [float(r["mean_q"]) for r in rows], label="mean Q")
plt.xlabel("episode")
plt.legend()
plt.savefig("curve.png", dpi=150)
"#;

const PLOT_TRACE: &str = r#"# Per-UAV position, heading and turn rate from trace.csv.
import csv, sys
import matplotlib.pyplot as plt

rows = list(csv.DictReader(open(sys.argv[1] if len(sys.argv) > 1 else "trace.csv")))
t = [int(r["t"]) for r in rows]
uavs = sorted({k.split("_")[0] for k in rows[0] if k.startswith("uav")})
fields = ["x", "y", "z", "heading", "turn_rate"]
fig, axes = plt.subplots(len(fields), 1, sharex=True, figsize=(6, 10))
for ax, f in zip(axes, fields):
    for u in uavs:
        ax.plot(t, [float(r[f"{u}_{f}"]) for r in rows], label=u)
    ax.set_ylabel(f)
axes[0].legend()
axes[-1].set_xlabel("slot")
fig.savefig("trace.png", dpi=150)
"#;

const PLOT_COMPARE: &str = r#"# Energy efficiency and fairness versus covering range from compare.csv.
import csv, statistics, sys
from collections import defaultdict
import matplotlib.pyplot as plt

rows = list(csv.DictReader(open(sys.argv[1] if len(sys.argv) > 1 else "compare.csv")))
groups = defaultdict(list)
for r in rows:
    groups[(r["policy"], float(r["range_m"]))].append(r)
fig, axes = plt.subplots(1, 2, figsize=(10, 4))
for ax, metric in zip(axes, ["ee", "fairness"]):
    for policy in sorted({p for p, _ in groups}):
        ranges = sorted(x for p, x in groups if p == policy)
        vals = [[float(r[metric]) for r in groups[(policy, x)]] for x in ranges]
        mean = [statistics.mean(v) for v in vals]
        std = [statistics.stdev(v) if len(v) > 1 else 0.0 for v in vals]
        ax.errorbar([x / 100 for x in ranges], mean, yerr=std, label=policy, capsize=3)
    ax.set_xlabel("covering range (x100 m)")
    ax.set_ylabel(metric)
    ax.legend()
fig.savefig("compare.png", dpi=150)
"#;
