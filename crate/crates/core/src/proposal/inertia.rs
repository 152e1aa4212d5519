//! Trajectory-only box prediction used to place search areas.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{decode_delta, encode_delta, BBox};
use crate::nn::{mlp_forward, mlp_train_step, MlpWeights, TrainSample};

/// Past positions fed to the predictor.
pub const INERTIA_POSITIONS: usize = 6;
/// Delta vectors derived from those positions.
pub const INERTIA_DELTAS: usize = INERTIA_POSITIONS - 1;
pub const INERTIA_INPUT_DIM: usize = 4 * INERTIA_DELTAS;
pub const HISTORY_CAPACITY: usize = INERTIA_POSITIONS + 1;
pub const MLP_HIDDEN: (usize, usize) = (64, 64);

/// Bounded ring of recent boxes, newest last.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BoxHistory {
    boxes: VecDeque<BBox>,
}

impl BoxHistory {
    pub fn new() -> Self {
        BoxHistory {
            boxes: VecDeque::with_capacity(HISTORY_CAPACITY),
        }
    }

    pub fn seeded(b: BBox) -> Self {
        let mut h = Self::new();
        h.push(b);
        h
    }

    pub fn push(&mut self, b: BBox) {
        if self.boxes.len() == HISTORY_CAPACITY {
            self.boxes.pop_front();
        }
        self.boxes.push_back(b);
    }

    pub fn newest(&self) -> Option<&BBox> {
        self.boxes.back()
    }

    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &BBox> {
        self.boxes.iter()
    }
}

/// Predictor input from a newest-last position list: deltas between
/// consecutive positions of the last six, oldest first, with missing older
/// deltas left at zero.
pub fn inertia_input<'a>(positions: impl IntoIterator<Item = &'a BBox>) -> Vec<f64> {
    let all: Vec<&BBox> = positions.into_iter().collect();
    let recent = &all[all.len().saturating_sub(INERTIA_POSITIONS)..];
    let mut input = vec![0.0; INERTIA_INPUT_DIM];
    let n = recent.len().saturating_sub(1);
    let offset = INERTIA_DELTAS - n;
    for (i, pair) in recent.windows(2).enumerate() {
        let d = encode_delta(pair[0], pair[1]).to_array();
        input[4 * (offset + i)..4 * (offset + i + 1)].copy_from_slice(&d);
    }
    input
}

/// Coarse next-frame box from the trajectory alone.
pub fn predict_inertia(history: &BoxHistory, mlp: &MlpWeights) -> Result<BBox> {
    let last = history
        .newest()
        .ok_or_else(|| Error::State("inertia prediction needs at least one box".into()))?;
    let delta = mlp_forward(&inertia_input(history.iter()), mlp)?;
    Ok(decode_delta(last, &delta))
}

/// Random constant-velocity trajectories (with a slow constant scale drift)
/// turned into predictor samples. Histories are truncated at random so cold
/// starts are represented.
pub fn synthetic_inertia_batch(rng: &mut ChaCha8Rng, size: usize) -> Vec<TrainSample> {
    (0..size)
        .map(|_| {
            let w = rng.gen_range(12.0..160.0);
            let h = rng.gen_range(12.0..160.0);
            let (vx, vy): (f64, f64) = (rng.gen_range(-12.0..12.0), rng.gen_range(-12.0..12.0));
            let growth: f64 = rng.gen_range(-0.02..0.02);
            let known = rng.gen_range(2..=INERTIA_POSITIONS);
            let path: Vec<BBox> = (0..=INERTIA_POSITIONS)
                .map(|t| {
                    let s = (growth * t as f64).exp();
                    BBox::new(300.0 + vx * t as f64, 200.0 + vy * t as f64, w * s, h * s)
                })
                .collect();
            let (past, next) = path.split_at(INERTIA_POSITIONS);
            let past = &past[INERTIA_POSITIONS - known..];
            TrainSample {
                input: inertia_input(past),
                target: encode_delta(past.last().unwrap(), &next[0]),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct InertiaTraining {
    pub steps: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for InertiaTraining {
    fn default() -> Self {
        InertiaTraining {
            steps: 1000,
            batch_size: 64,
            learning_rate: 0.5,
            seed: 0,
        }
    }
}

/// Trains `mlp` on freshly drawn synthetic batches; returns the per-step losses.
pub fn train_inertia(mlp: &mut MlpWeights, cfg: &InertiaTraining) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut losses = Vec::with_capacity(cfg.steps);
    for _ in 0..cfg.steps {
        let batch = synthetic_inertia_batch(&mut rng, cfg.batch_size);
        losses.push(mlp_train_step(mlp, &batch, cfg.learning_rate)?);
    }
    Ok(losses)
}

/// Untrained predictor sized for tracker use.
pub fn inertia_mlp(rng: &mut ChaCha8Rng) -> MlpWeights {
    MlpWeights::init(INERTIA_INPUT_DIM, MLP_HIDDEN, rng)
}
