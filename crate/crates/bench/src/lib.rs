//! Seeded fixtures shared by the benchmarks.

use mvot_core::eval::{grid_boxes, synth_sequence, Sequence, SynthObject, SynthSpec};
use mvot_core::tracker::{Tracker, TrackerConfig};
use mvot_core::weights::{NetworkConfig, NetworkWeights};
use mvot_core::{BBox, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_tensor(shape: &[usize], seed: u64) -> Tensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Tensor::from_fn(shape, |_| rng.gen_range(-1.0f32..1.0)).expect("non-empty shape")
}

/// Two-frame sequence with `targets` static squares on a grid.
pub fn grid_sequence(targets: usize, width: usize, height: usize) -> (Sequence, Vec<(u64, BBox)>) {
    let boxes: Vec<(u64, BBox)> = grid_boxes(targets, width, height, 32.0)
        .into_iter()
        .enumerate()
        .map(|(i, b)| (i as u64 + 1, b))
        .collect();
    let spec = SynthSpec {
        width,
        height,
        frames: 2,
        fps: 30.0,
        objects: boxes
            .iter()
            .map(|(id, b)| SynthObject {
                id: *id,
                start: *b,
                velocity: (0.0, 0.0),
                texture: *id,
            })
            .collect(),
        background: [128, 128, 128],
        block: 6,
        noise: 10,
        noise_seed: 1,
    };
    (synth_sequence(&spec).expect("valid spec"), boxes)
}

/// Tracker with default-width seeded weights, initialized on frame 0.
pub fn ready_tracker(seq: &Sequence, boxes: &[(u64, BBox)], config: TrackerConfig) -> Tracker {
    let weights = NetworkWeights::init(&NetworkConfig::default(), 7);
    let mut t = Tracker::new(weights, config).expect("valid config");
    t.init_targets(&seq.frames[0].to_tensor(), boxes)
        .expect("boxes inside the frame");
    t
}
