mod common;

use common::*;
use mvot_core::geometry::BoxDelta;
use mvot_core::nn::{mlp_forward, mlp_train_step, FeaturePyramid, MlpWeights, TrainSample};
use mvot_core::proposal::{
    attention_apply, attention_init, exemplar_side, extract_exemplar, extract_search, inertia_mlp,
    predict_inertia, search_side, select_level, synthetic_inertia_batch, train_inertia, AttentionWeights,
    BoxHistory, InertiaTraining, RoiConfig,
};
use mvot_core::{BBox, Kernel2D, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn seeded_attention(channels: usize, rng: &mut ChaCha8Rng) -> AttentionWeights {
    let mut w = AttentionWeights::init(channels, rng);
    w.alpha_self = rng.gen_range(-1.0..1.0);
    w.alpha_cross = rng.gen_range(-1.0..1.0);
    w
}

#[test]
fn cached_attention_equals_recomputation_bitwise() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let w = seeded_attention(16, &mut rng);
    let exemplar = random_tensor(&[16, 7, 7], &mut rng);
    let cache = attention_init(&exemplar, &w).unwrap();
    for _ in 0..50 {
        let search = random_tensor(&[16, 31, 31], &mut rng);
        let cached = attention_apply(&cache, &search, &w).unwrap();
        let fresh = attention_apply(&attention_init(&exemplar, &w).unwrap(), &search, &w).unwrap();
        assert_eq!(cached, fresh);
    }
}

/// Cosine/softmax channel attention and the residual combination evaluated
/// in f64 with explicit loops.
fn attention_oracle(x_e: &Tensor, x_s: &Tensor, w: &AttentionWeights) -> (Vec<f64>, Vec<f64>) {
    let proj = |x: &Tensor, k: &Kernel2D| -> Vec<Vec<f64>> {
        let (c, h, wd) = x.dims3().unwrap();
        (0..k.out_channels())
            .map(|o| {
                (0..h * wd)
                    .map(|p| {
                        k.bias()[o] as f64
                            + (0..c)
                                .map(|i| {
                                    k.weights().data()[o * c + i] as f64 * x.data()[i * h * wd + p] as f64
                                })
                                .sum::<f64>()
                    })
                    .collect()
            })
            .collect()
    };
    let att = |q: &[Vec<f64>], k: &[Vec<f64>]| -> Vec<Vec<f64>> {
        let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt().max(1e-12);
        q.iter()
            .map(|qi| {
                let row: Vec<f64> = k
                    .iter()
                    .map(|kj| qi.iter().zip(kj).map(|(a, b)| a * b).sum::<f64>() / (norm(qi) * norm(kj)))
                    .collect();
                let m = row.iter().cloned().fold(f64::MIN, f64::max);
                let z: f64 = row.iter().map(|v| (v - m).exp()).sum();
                row.iter().map(|v| (v - m).exp() / z).collect()
            })
            .collect()
    };
    let mix = |a: &[Vec<f64>], v: &[Vec<f64>]| -> Vec<Vec<f64>> {
        a.iter()
            .map(|row| {
                (0..v[0].len())
                    .map(|p| row.iter().zip(v).map(|(r, vj)| r * vj[p]).sum())
                    .collect()
            })
            .collect()
    };
    let a_e = att(&proj(x_e, &w.query), &proj(x_e, &w.key));
    let a_s = att(&proj(x_s, &w.query), &proj(x_s, &w.key));
    let e_self = mix(&a_e, &proj(x_e, &w.value_self));
    let e_cross = mix(&a_s, &proj(x_e, &w.value_cross));
    let s_self = mix(&a_s, &proj(x_s, &w.value_self));
    let s_cross = mix(&a_e, &proj(x_s, &w.value_cross));
    let combine = |x: &Tensor, s: &[Vec<f64>], c: &[Vec<f64>]| -> Vec<f64> {
        let flat_s: Vec<f64> = s.concat();
        let flat_c: Vec<f64> = c.concat();
        x.data()
            .iter()
            .enumerate()
            .map(|(i, v)| *v as f64 + w.alpha_self as f64 * flat_s[i] + w.alpha_cross as f64 * flat_c[i])
            .collect()
    };
    (combine(x_e, &e_self, &e_cross), combine(x_s, &s_self, &s_cross))
}

#[test]
fn attention_matches_loop_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..5 {
        let w = seeded_attention(6, &mut rng);
        let x_e = random_tensor(&[6, 7, 7], &mut rng);
        let x_s = random_tensor(&[6, 31, 31], &mut rng);
        let (e, s) = attention_apply(&attention_init(&x_e, &w).unwrap(), &x_s, &w).unwrap();
        let (oe, os) = attention_oracle(&x_e, &x_s, &w);
        assert!(max_abs_diff(e.data(), &oe) < 1e-4);
        assert!(max_abs_diff(s.data(), &os) < 1e-4);
    }
}

/// Level `k` filled with the constant `k`.
fn constant_pyramid(frame: usize, channels: usize) -> FeaturePyramid {
    let levels = (1..=4)
        .map(|k| {
            let side = frame.div_ceil(1 << k);
            Tensor::filled(&[channels, side, side], k as f32).unwrap()
        })
        .collect();
    FeaturePyramid::new(levels, frame, frame).unwrap()
}

#[test]
fn exemplar_reads_the_routed_level() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let c = 4;
    let bridge = Kernel2D::new(
        random_tensor(&[c, c, 1, 1], &mut rng),
        vec![0.1, -0.2, 0.3, 0.0],
        1,
        0,
    )
    .unwrap();
    let pyr = constant_pyramid(1024, c);
    let cfg = RoiConfig::default();
    let mut shapes = Vec::new();
    for (side, level) in [(50.0, 2usize), (140.0, 4)] {
        let b = BBox::new(512.0, 512.0, side, side);
        let l = search_side(exemplar_side(&b, cfg.context));
        assert_eq!(select_level(l, l, &cfg), level);
        let xe = extract_exemplar(&pyr, &b, &cfg, &bridge).unwrap();
        for o in 0..c {
            let want: f64 = bridge.bias()[o] as f64
                + (0..c)
                    .map(|i| bridge.weights().data()[o * c + i] as f64 * level as f64)
                    .sum::<f64>();
            assert!(xe.channel(o).iter().all(|v| (*v as f64 - want).abs() < 1e-5));
        }
        shapes.push(xe.shape().to_vec());
    }
    assert_eq!(shapes[0], vec![c, 7, 7]);
    assert_eq!(shapes[0], shapes[1]);
}

#[test]
fn search_area_at_corner_is_zero_extended() {
    let c = 2;
    let bridge = Kernel2D::new(Tensor::filled(&[c, c, 1, 1], 0.5).unwrap(), vec![0.0; c], 1, 0).unwrap();
    let pyr = constant_pyramid(256, c);
    let cfg = RoiConfig::default();
    let b = BBox::new(10.0, 10.0, 20.0, 20.0);
    let area = extract_search(&pyr, &b, &cfg, &bridge).unwrap();
    assert_eq!(area.features.shape(), &[c, 31, 31]);
    let ratio = area.region.w / exemplar_side(&b, cfg.context);
    assert!((ratio - 31.0 / 15.0).abs() < 1e-12);
    assert_eq!(area.features.at(0, 0, 0), 0.0);
    assert!(area.features.at(0, 30, 30) > 0.0);
}

fn smooth_l1_ref(r: f64) -> f64 {
    if r.abs() < 1.0 {
        0.5 * r * r
    } else {
        r.abs() - 0.5
    }
}

fn loss_ref(mlp: &MlpWeights, batch: &[TrainSample]) -> f64 {
    let mut total = 0.0;
    for s in batch {
        let y = mlp_forward(&s.input, mlp).unwrap().to_array();
        total += y
            .iter()
            .zip(s.target.to_array())
            .map(|(a, b)| smooth_l1_ref(a - b))
            .sum::<f64>();
    }
    total / (4 * batch.len()) as f64
}

#[test]
fn mlp_gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let mlp = MlpWeights::init(3, (1, 2), &mut rng);
    assert_eq!(mlp.parameter_count(), 20);
    // Residuals are kept well inside the quadratic branch of the loss.
    let batch: Vec<TrainSample> = (0..6)
        .map(|_| TrainSample {
            input: (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            target: BoxDelta::new(
                rng.gen_range(-0.3..0.3),
                rng.gen_range(-0.3..0.3),
                rng.gen_range(-0.3..0.3),
                rng.gen_range(-0.3..0.3),
            ),
        })
        .collect();
    let (_, grad) = mlp.loss_and_gradient(&batch).unwrap();
    let params = mlp.parameters();
    let eps = 1e-4;
    let mut worst: f64 = 0.0;
    for i in 0..params.len() {
        let mut plus = mlp.clone();
        let mut minus = mlp.clone();
        let mut p = params.clone();
        p[i] += eps;
        plus.set_parameters(&p).unwrap();
        p[i] -= 2.0 * eps;
        minus.set_parameters(&p).unwrap();
        let fd = (loss_ref(&plus, &batch) - loss_ref(&minus, &batch)) / (2.0 * eps);
        let rel = (grad[i] - fd).abs() / grad[i].abs().max(fd.abs()).max(1e-8);
        worst = worst.max(rel);
    }
    assert!(worst < 1e-3, "max relative error {worst}");
}

fn zero_baseline(batch: &[TrainSample]) -> f64 {
    loss_ref(&MlpWeights::zeros(batch[0].input.len(), (1, 1)), batch)
}

#[test]
fn training_beats_zero_prediction_within_500_steps() {
    let mut mlp = inertia_mlp(&mut ChaCha8Rng::seed_from_u64(25));
    let cfg = InertiaTraining {
        steps: 500,
        ..InertiaTraining::default()
    };
    train_inertia(&mut mlp, &cfg).unwrap();
    let held_out = synthetic_inertia_batch(&mut ChaCha8Rng::seed_from_u64(999), 512);
    let (trained, baseline) = (loss_ref(&mlp, &held_out), zero_baseline(&held_out));
    assert!(trained < 0.1 * baseline, "{trained} vs baseline {baseline}");
}

#[test]
fn loss_strictly_decreases_over_first_100_steps() {
    let mut mlp = inertia_mlp(&mut ChaCha8Rng::seed_from_u64(26));
    let batch = synthetic_inertia_batch(&mut ChaCha8Rng::seed_from_u64(27), 128);
    let mut prev = f64::INFINITY;
    for _ in 0..100 {
        let loss = mlp_train_step(&mut mlp, &batch, 0.05).unwrap();
        assert!(loss < prev, "{loss} >= {prev}");
        prev = loss;
    }
}

#[test]
fn trained_predictor_extrapolates_constant_motion() {
    let mut mlp = inertia_mlp(&mut ChaCha8Rng::seed_from_u64(28));
    train_inertia(&mut mlp, &InertiaTraining::default()).unwrap();
    let mut history = BoxHistory::new();
    for t in 0..6 {
        history.push(BBox::new(100.0 + 5.0 * t as f64, 80.0, 40.0, 30.0));
    }
    let p = predict_inertia(&history, &mlp).unwrap();
    assert!((p.cx - 130.0).abs() < 1.0, "predicted cx {}", p.cx);
}
