//! Steps the environment with a hand-written controller that flies each
//! UAV straight at its goal, printing the reward and link state per slot.
//!
//! cargo run --example environment_rollout

use std::f64::consts::{FRAC_PI_2, TAU};

use uav_coverage::env::{ActionVector, Env, EnvConfig};

fn main() -> uav_coverage::Result<()> {
    let mut env = Env::new(EnvConfig::default())?;
    env.reset(3);
    while !env.is_done() {
        let mut action = Vec::new();
        for (i, u) in env.uavs().iter().enumerate() {
            let d = u.goal - u.position;
            let azimuth = d.y.atan2(d.x).rem_euclid(TAU);
            let polar = d.horizontal_norm().atan2(d.z);
            let speed = (d.norm() / env.config().world.v_max).min(1.0);
            action.extend([speed, azimuth / TAU, polar / (2.0 * FRAC_PI_2), (i % 2) as f64 * 0.75]);
        }
        let out = env.step(&ActionVector(action))?;
        let goals: Vec<String> = env.goal_distances().iter().map(|d| format!("{d:6.1}")).collect();
        println!(
            "t={:2} reward {:7.3} connected {} goal distances [{}]",
            env.t(),
            out.reward,
            out.info.connected,
            goals.join(", ")
        );
    }
    let a = &env.record().aggregates;
    println!(
        "total reward {:.3}, fairness {:.3}, energy {:.0} J, efficiency {:.3}",
        a.total_reward, a.fairness, a.total_energy, a.energy_efficiency
    );
    Ok(())
}
