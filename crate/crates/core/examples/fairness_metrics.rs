//! Jain fairness of a few throughput allocations and the energy efficiency
//! of a hand-built two-slot episode.
//!
//! cargo run --example fairness_metrics

use uav_coverage::metrics::{jain_index, EfficiencyMode, EpisodeRecord, SlotRow, UavSample};

fn main() -> uav_coverage::Result<()> {
    for v in [vec![5.0, 5.0, 5.0, 5.0], vec![1.0, 0.0, 0.0, 0.0], vec![2.0, 4.0], vec![3.0, 1.0, 1.0]] {
        println!("jain({v:?}) = {:.4}", jain_index(&v)?);
    }

    let capacity = 1e5;
    let mut record = EpisodeRecord::new(vec![capacity], 1.0, 1e6, capacity, EfficiencyMode::FairThroughput);
    let mut energy = capacity;
    for t in 1..=2 {
        energy -= 50_000.0;
        let uav = UavSample { x: 0.0, y: 0.0, z: 50.0, heading: 0.0, turn_rate: 0.0, energy };
        let row = SlotRow {
            t,
            uavs: vec![uav],
            user_throughput: vec![1e6, 1e6],
            reward: 0.0,
            connected: true,
            clamped: false,
        };
        record.push(row, 50_000.0)?;
    }
    let a = &record.aggregates;
    println!(
        "fairness {:.3}, throughput {:.0} bit, energy {:.0} J, efficiency {:.3}",
        a.fairness, a.total_throughput, a.total_energy, record.energy_efficiency()?
    );
    Ok(())
}
