//! Prints expected pathloss and single-band throughput over a grid of slant
//! distances and elevation angles.
//!
//! cargo run --example channel_table

use uav_coverage::config::RunConfig;
use uav_coverage::harness::channel_table;

fn main() -> uav_coverage::Result<()> {
    let mut config = RunConfig::default();
    config.channel_table.distances = vec![25.0, 50.0, 100.0, 200.0, 400.0];
    config.channel_table.elevations_deg = vec![5.0, 15.0, 30.0, 60.0, 90.0];
    let table = channel_table(&config)?;
    println!("{:>8} {:>8} {:>8} {:>10} {:>12}", "elev", "dist", "P_los", "loss_dB", "Mbit/s");
    for line in table.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        println!("{:>8.0} {:>8.0} {:>8.3} {:>10.2} {:>12.3}", v[0], v[1], v[2], v[3], v[4] / 1e6);
    }
    Ok(())
}
