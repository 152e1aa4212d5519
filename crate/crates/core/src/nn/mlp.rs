use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::init::uniform_vec;
use crate::error::{Error, Result};
use crate::geometry::BoxDelta;

/// Fully connected layer, `weight` stored row-major as `outputs × inputs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    fn init(inputs: usize, outputs: usize, rng: &mut ChaCha8Rng) -> Self {
        Dense {
            inputs,
            outputs,
            weight: uniform_vec(rng, inputs * outputs, inputs),
            bias: uniform_vec(rng, outputs, inputs),
        }
    }

    fn zeros(inputs: usize, outputs: usize) -> Self {
        Dense {
            inputs,
            outputs,
            weight: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.weight
            .chunks_exact(self.inputs)
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b)
            .collect()
    }
}

/// Inertia predictor: two tanh hidden layers and a linear 4-unit output.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpWeights {
    pub hidden1: Dense,
    pub hidden2: Dense,
    pub output: Dense,
}

/// One supervised example: flattened past deltas and the next delta.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainSample {
    pub input: Vec<f64>,
    pub target: BoxDelta,
}

impl MlpWeights {
    pub fn init(input_dim: usize, hidden: (usize, usize), rng: &mut ChaCha8Rng) -> Self {
        MlpWeights {
            hidden1: Dense::init(input_dim, hidden.0, rng),
            hidden2: Dense::init(hidden.0, hidden.1, rng),
            output: Dense::init(hidden.1, 4, rng),
        }
    }

    pub fn zeros(input_dim: usize, hidden: (usize, usize)) -> Self {
        MlpWeights {
            hidden1: Dense::zeros(input_dim, hidden.0),
            hidden2: Dense::zeros(hidden.0, hidden.1),
            output: Dense::zeros(hidden.1, 4),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.hidden1.inputs
    }

    fn layers(&self) -> [&Dense; 3] {
        [&self.hidden1, &self.hidden2, &self.output]
    }

    fn layers_mut(&mut self) -> [&mut Dense; 3] {
        [&mut self.hidden1, &mut self.hidden2, &mut self.output]
    }

    pub fn parameter_count(&self) -> usize {
        self.layers().iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    /// All parameters flattened layer by layer (weights then bias).
    pub fn parameters(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.parameter_count());
        for l in self.layers() {
            out.extend_from_slice(&l.weight);
            out.extend_from_slice(&l.bias);
        }
        out
    }

    pub fn set_parameters(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.parameter_count() {
            return Err(Error::dim(format!(
                "expected {} parameters, got {}",
                self.parameter_count(),
                params.len()
            )));
        }
        let mut rest = params;
        for l in self.layers_mut() {
            let (w, r) = rest.split_at(l.weight.len());
            l.weight.copy_from_slice(w);
            let (b, r) = r.split_at(l.bias.len());
            l.bias.copy_from_slice(b);
            rest = r;
        }
        Ok(())
    }

    /// Rounds every parameter to the nearest `f32`, matching what a weights
    /// file round-trip yields.
    pub fn round_to_f32(&mut self) {
        for l in self.layers_mut() {
            for v in l.weight.iter_mut().chain(l.bias.iter_mut()) {
                *v = *v as f32 as f64;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.parameters().iter().all(|v| v.is_finite())
    }

    /// Mean smooth-L1 loss over the batch and its gradient with respect to
    /// [`MlpWeights::parameters`].
    pub fn loss_and_gradient(&self, batch: &[TrainSample]) -> Result<(f64, Vec<f64>)> {
        self.loss_and_gradient_masked(batch, None)
    }

    fn loss_and_gradient_masked(
        &self,
        batch: &[TrainSample],
        mut dropout: Option<(f64, &mut ChaCha8Rng)>,
    ) -> Result<(f64, Vec<f64>)> {
        if batch.is_empty() {
            return Err(Error::Argument("training batch is empty".into()));
        }
        let [l1, l2, l3] = self.layers();
        let mut g1w = vec![0.0; l1.weight.len()];
        let mut g1b = vec![0.0; l1.bias.len()];
        let mut g2w = vec![0.0; l2.weight.len()];
        let mut g2b = vec![0.0; l2.bias.len()];
        let mut g3w = vec![0.0; l3.weight.len()];
        let mut g3b = vec![0.0; l3.bias.len()];
        let norm = 1.0 / (4.0 * batch.len() as f64);
        let mut loss = 0.0;

        for sample in batch {
            let x = &sample.input;
            if x.len() != self.input_dim() {
                return Err(Error::dim(format!(
                    "mlp input length {} != {}",
                    x.len(),
                    self.input_dim()
                )));
            }
            let mut draw_mask = |n: usize| -> Vec<f64> {
                match dropout.as_mut() {
                    Some((p, rng)) if *p > 0.0 => (0..n)
                        .map(|_| {
                            if rng.gen::<f64>() < *p {
                                0.0
                            } else {
                                1.0 / (1.0 - *p)
                            }
                        })
                        .collect(),
                    _ => vec![1.0; n],
                }
            };
            let t1: Vec<f64> = l1.apply(x).into_iter().map(f64::tanh).collect();
            let m1 = draw_mask(t1.len());
            let a1: Vec<f64> = t1.iter().zip(&m1).map(|(a, m)| a * m).collect();
            let t2: Vec<f64> = l2.apply(&a1).into_iter().map(f64::tanh).collect();
            let m2 = draw_mask(t2.len());
            let a2: Vec<f64> = t2.iter().zip(&m2).map(|(a, m)| a * m).collect();
            let y = l3.apply(&a2);

            let target = sample.target.to_array();
            let mut dy = [0.0; 4];
            for i in 0..4 {
                let r = y[i] - target[i];
                loss += smooth_l1(r);
                dy[i] = r.clamp(-1.0, 1.0) * norm;
            }

            let mut da2 = vec![0.0; l3.inputs];
            for (o, d) in dy.iter().enumerate() {
                g3b[o] += d;
                let row = o * l3.inputs;
                for j in 0..l3.inputs {
                    g3w[row + j] += d * a2[j];
                    da2[j] += d * l3.weight[row + j];
                }
            }
            let dz2: Vec<f64> = (0..l2.outputs)
                .map(|j| da2[j] * m2[j] * (1.0 - t2[j] * t2[j]))
                .collect();
            let mut da1 = vec![0.0; l2.inputs];
            for (o, d) in dz2.iter().enumerate() {
                g2b[o] += d;
                let row = o * l2.inputs;
                for j in 0..l2.inputs {
                    g2w[row + j] += d * a1[j];
                    da1[j] += d * l2.weight[row + j];
                }
            }
            for o in 0..l1.outputs {
                let d = da1[o] * m1[o] * (1.0 - t1[o] * t1[o]);
                g1b[o] += d;
                let row = o * l1.inputs;
                for j in 0..l1.inputs {
                    g1w[row + j] += d * x[j];
                }
            }
        }
        let mut grad = Vec::with_capacity(self.parameter_count());
        for part in [g1w, g1b, g2w, g2b, g3w, g3b] {
            grad.extend(part);
        }
        Ok((loss * norm, grad))
    }

    fn apply_gradient(&mut self, grad: &[f64], lr: f64) {
        let mut params = self.parameters();
        for (p, g) in params.iter_mut().zip(grad) {
            *p -= lr * g;
        }
        self.set_parameters(&params).expect("same parameter count");
    }

    /// Gradient step with inverted dropout of rate `p` on the hidden units.
    pub fn train_step_with_dropout(
        &mut self,
        batch: &[TrainSample],
        lr: f64,
        p: f64,
        rng: &mut ChaCha8Rng,
    ) -> Result<f64> {
        check_lr(lr)?;
        if !(0.0..1.0).contains(&p) {
            return Err(Error::Argument(format!("dropout rate {p} outside [0, 1)")));
        }
        let (loss, grad) = self.loss_and_gradient_masked(batch, Some((p, rng)))?;
        self.apply_gradient(&grad, lr);
        Ok(loss)
    }
}

fn check_lr(lr: f64) -> Result<()> {
    if lr > 0.0 && lr.is_finite() {
        Ok(())
    } else {
        Err(Error::Argument(format!(
            "learning rate must be positive, got {lr}"
        )))
    }
}

/// Quadratic below 1, linear above.
pub fn smooth_l1(r: f64) -> f64 {
    let a = r.abs();
    if a < 1.0 {
        0.5 * r * r
    } else {
        a - 0.5
    }
}

pub fn mlp_forward(input: &[f64], weights: &MlpWeights) -> Result<BoxDelta> {
    if input.len() != weights.input_dim() {
        return Err(Error::dim(format!(
            "mlp input length {} != {}",
            input.len(),
            weights.input_dim()
        )));
    }
    let a1: Vec<f64> = weights.hidden1.apply(input).into_iter().map(f64::tanh).collect();
    let a2: Vec<f64> = weights.hidden2.apply(&a1).into_iter().map(f64::tanh).collect();
    let y = weights.output.apply(&a2);
    Ok(BoxDelta::new(y[0], y[1], y[2], y[3]))
}

/// One plain gradient-descent step; returns the mean loss before the update.
pub fn mlp_train_step(weights: &mut MlpWeights, batch: &[TrainSample], lr: f64) -> Result<f64> {
    check_lr(lr)?;
    let (loss, grad) = weights.loss_and_gradient(batch)?;
    weights.apply_gradient(&grad, lr);
    Ok(loss)
}
