//! Compares backpropagated gradients of a small random network against
//! central finite differences of a squared-error loss.
//!
//! cargo run --example gradient_check -- [seed]

use ndarray::Array2;
use uav_coverage::nn::{Activation, DenseNetwork};
use uav_coverage::rng::{stream, Stream};

fn loss(net: &DenseNetwork, x: &Array2<f64>, y: &Array2<f64>) -> f64 {
    let out = net.predict(x.view()).unwrap();
    0.5 * (&out - y).mapv(|d| d * d).sum()
}

fn main() -> uav_coverage::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(7);
    let mut rng = stream(seed, Stream::Agent);
    let net = DenseNetwork::new(&[5, 8, 6, 3], Activation::Relu, Activation::Sigmoid, &mut rng);
    let x = Array2::from_shape_fn((4, 5), |(i, j)| ((i * 5 + j) as f64).sin());
    let y = Array2::from_shape_fn((4, 3), |(i, j)| 0.25 * (i + j) as f64 / 3.0);

    let cache = net.forward(x.view())?;
    let tape = net.backward(&cache, (cache.output() - &y).view())?;
    let analytic: Vec<f64> = tape
        .weights
        .iter()
        .zip(&tape.biases)
        .flat_map(|(w, b)| w.iter().chain(b.iter()).copied().collect::<Vec<_>>())
        .collect();

    let eps = 1e-5;
    let base = net.flat_parameters();
    let mut probe = net.clone();
    let mut worst = 0.0f64;
    for (k, a) in analytic.iter().enumerate() {
        let mut p = base.clone();
        p[k] += eps;
        probe.set_flat_parameters(&p)?;
        let up = loss(&probe, &x, &y);
        p[k] -= 2.0 * eps;
        probe.set_flat_parameters(&p)?;
        let down = loss(&probe, &x, &y);
        let numeric = (up - down) / (2.0 * eps);
        let scale = a.abs().max(numeric.abs());
        if scale > 1e-8 {
            worst = worst.max((a - numeric).abs() / scale);
        }
    }
    println!("{} parameters, worst relative error {worst:.2e}", analytic.len());
    Ok(())
}
