use ndarray::{Array1, Array2, Zip};
use serde::{Deserialize, Serialize};

use super::{DenseNetwork, GradientTape};
use crate::error::Result;

/// Update rule applied to a network's gradients.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OptimizerKind {
    #[default]
    Sgd,
    Momentum { beta: f64 },
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

/// Optimizer state for one network.
#[derive(Debug, Clone)]
pub struct Optimizer {
    kind: OptimizerKind,
    learning_rate: f64,
    step: i32,
    first: Option<(Vec<Array2<f64>>, Vec<Array1<f64>>)>,
    second: Option<(Vec<Array2<f64>>, Vec<Array1<f64>>)>,
}

fn zeros_like(net: &DenseNetwork) -> (Vec<Array2<f64>>, Vec<Array1<f64>>) {
    (
        net.layers().iter().map(|l| Array2::zeros(l.weights.dim())).collect(),
        net.layers().iter().map(|l| Array1::zeros(l.bias.len())).collect(),
    )
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, learning_rate: f64) -> Self {
        Self {
            kind,
            learning_rate,
            step: 0,
            first: None,
            second: None,
        }
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }

    /// Descends along `tape` (which holds gradients of a loss to minimize).
    pub fn apply(&mut self, net: &mut DenseNetwork, tape: &GradientTape) -> Result<()> {
        let lr = self.learning_rate;
        match self.kind {
            OptimizerKind::Sgd => net.sgd_update(tape, lr),
            OptimizerKind::Momentum { beta } => {
                net.check_tape(tape)?;
                let (vw, vb) = self.first.get_or_insert_with(|| zeros_like(net));
                for (i, l) in net.layers_mut().iter_mut().enumerate() {
                    vw[i].zip_mut_with(&tape.weights[i], |v, g| *v = beta * *v + g);
                    vb[i].zip_mut_with(&tape.biases[i], |v, g| *v = beta * *v + g);
                    l.weights.scaled_add(-lr, &vw[i]);
                    l.bias.scaled_add(-lr, &vb[i]);
                }
                Ok(())
            }
            OptimizerKind::Adam { beta1, beta2, eps } => {
                net.check_tape(tape)?;
                self.step += 1;
                let c1 = 1.0 - beta1.powi(self.step);
                let c2 = 1.0 - beta2.powi(self.step);
                let (mw, mb) = self.first.get_or_insert_with(|| zeros_like(net));
                let (sw, sb) = self.second.get_or_insert_with(|| zeros_like(net));
                for (i, l) in net.layers_mut().iter_mut().enumerate() {
                    Zip::from(&mut l.weights)
                        .and(&mut mw[i])
                        .and(&mut sw[i])
                        .and(&tape.weights[i])
                        .for_each(|p, m, s, &g| {
                            *m = beta1 * *m + (1.0 - beta1) * g;
                            *s = beta2 * *s + (1.0 - beta2) * g * g;
                            *p -= lr * (*m / c1) / ((*s / c2).sqrt() + eps);
                        });
                    Zip::from(&mut l.bias)
                        .and(&mut mb[i])
                        .and(&mut sb[i])
                        .and(&tape.biases[i])
                        .for_each(|p, m, s, &g| {
                            *m = beta1 * *m + (1.0 - beta1) * g;
                            *s = beta2 * *s + (1.0 - beta2) * g * g;
                            *p -= lr * (*m / c1) / ((*s / c2).sqrt() + eps);
                        });
                }
                Ok(())
            }
        }
    }
}
