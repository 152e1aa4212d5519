//! Brute-force reference implementations and fixtures shared by the
//! integration tests. Every oracle runs in f64 and is written without reuse of
//! the library's kernels.
#![allow(dead_code)]

use mvot_core::eval::{synth_sequence, Sequence, SynthObject, SynthSpec};
use mvot_core::nn::BackboneConfig;
use mvot_core::weights::NetworkConfig;
use mvot_core::{BBox, Tensor};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn random_tensor(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor {
    Tensor::from_fn(shape, |_| rng.gen_range(-1.0f32..1.0)).unwrap()
}

pub fn max_abs_diff(a: &[f32], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (*x as f64 - y).abs())
        .fold(0.0, f64::max)
}

/// Six nested loops over output channel, output position, input channel and
/// kernel offsets, with zero padding.
pub fn conv_oracle(input: &Tensor, weights: &Tensor, bias: &[f32], stride: usize, pad: usize) -> Vec<f64> {
    let (c, h, w) = (input.shape()[0], input.shape()[1], input.shape()[2]);
    let (oc, kh, kw) = (weights.shape()[0], weights.shape()[2], weights.shape()[3]);
    let oh = (h + 2 * pad - kh) / stride + 1;
    let ow = (w + 2 * pad - kw) / stride + 1;
    let x = input.data();
    let k = weights.data();
    let mut out = vec![0.0; oc * oh * ow];
    for o in 0..oc {
        for oy in 0..oh {
            for ox in 0..ow {
                let mut acc = bias[o] as f64;
                for ci in 0..c {
                    for ky in 0..kh {
                        for kx in 0..kw {
                            let iy = (oy * stride + ky) as i64 - pad as i64;
                            let ix = (ox * stride + kx) as i64 - pad as i64;
                            if iy < 0 || ix < 0 || iy >= h as i64 || ix >= w as i64 {
                                continue;
                            }
                            acc += k[((o * c + ci) * kh + ky) * kw + kx] as f64
                                * x[(ci * h + iy as usize) * w + ix as usize] as f64;
                        }
                    }
                }
                out[(o * oh + oy) * ow + ox] = acc;
            }
        }
    }
    out
}

/// Bilinear interpolation written as a tent-kernel sum over every cell of the
/// map: `Σ max(0, 1 − |y − p|) · max(0, 1 − |x − q|) · F[p][q]`, with pixel
/// centers at half-integers. Cells beyond the map contribute nothing.
pub fn bilinear_oracle(plane: &[f32], h: usize, w: usize, y: f64, x: f64) -> f64 {
    let mut acc = 0.0;
    for p in 0..h {
        for q in 0..w {
            let wy = (1.0 - (y - (p as f64 + 0.5)).abs()).max(0.0);
            let wx = (1.0 - (x - (q as f64 + 0.5)).abs()).max(0.0);
            acc += wy * wx * plane[p * w + q] as f64;
        }
    }
    acc
}

/// One sample at each bin center of `region`, per channel.
pub fn roi_align_oracle(feat: &Tensor, region: &BBox, out: usize) -> Vec<f64> {
    let (c, h, w) = (feat.shape()[0], feat.shape()[1], feat.shape()[2]);
    let mut res = Vec::with_capacity(c * out * out);
    for ch in 0..c {
        let plane = &feat.data()[ch * h * w..(ch + 1) * h * w];
        for i in 0..out {
            for j in 0..out {
                let y = region.top() + (i as f64 + 0.5) * region.h / out as f64;
                let x = region.left() + (j as f64 + 0.5) * region.w / out as f64;
                res.push(bilinear_oracle(plane, h, w, y, x));
            }
        }
    }
    res
}

/// 3×3 minimum with coordinates clamped into the map.
pub fn erode_oracle(map: &Tensor) -> Vec<f64> {
    let (c, h, w) = (map.shape()[0], map.shape()[1], map.shape()[2]);
    let mut out = Vec::with_capacity(c * h * w);
    for ch in 0..c {
        for y in 0..h as i64 {
            for x in 0..w as i64 {
                let mut m = f64::INFINITY;
                for dy in -1..=1i64 {
                    for dx in -1..=1i64 {
                        let yy = (y + dy).clamp(0, h as i64 - 1) as usize;
                        let xx = (x + dx).clamp(0, w as i64 - 1) as usize;
                        m = m.min(map.at(ch, yy, xx) as f64);
                    }
                }
                out.push(m);
            }
        }
    }
    out
}

/// Valid single-channel correlation of `search` with `kernel`.
pub fn correlate_plane(
    search: &[f32],
    sh: usize,
    sw: usize,
    kernel: &[f32],
    kh: usize,
    kw: usize,
) -> Vec<f64> {
    let (oh, ow) = (sh - kh + 1, sw - kw + 1);
    let mut out = vec![0.0; oh * ow];
    for y in 0..oh {
        for x in 0..ow {
            let mut acc = 0.0;
            for i in 0..kh {
                for j in 0..kw {
                    acc += kernel[i * kw + j] as f64 * search[(y + i) * sw + x + j] as f64;
                }
            }
            out[y * ow + x] = acc;
        }
    }
    out
}

/// Loop over targets and channels, one plane correlation each.
pub fn xcorr_oracle(exemplars: &Tensor, search: &Tensor) -> Vec<f64> {
    let s = exemplars.shape();
    let (n, c, kh, kw) = (s[0], s[1], s[2], s[3]);
    let (sh, sw) = (search.shape()[2], search.shape()[3]);
    let mut out = Vec::new();
    for t in 0..n {
        for ch in 0..c {
            let k = &exemplars.data()[((t * c + ch) * kh) * kw..((t * c + ch) * kh + kh) * kw];
            let p = &search.data()[((t * c + ch) * sh) * sw..((t * c + ch) * sh + sh) * sw];
            out.extend(correlate_plane(p, sh, sw, k, kh, kw));
        }
    }
    out
}

/// Reduced network for tests that do not pin the default widths.
pub fn small_network() -> NetworkConfig {
    NetworkConfig {
        backbone: BackboneConfig {
            stage_channels: [8, 16, 32, 32],
            blocks_per_stage: 1,
            input_channels: 3,
        },
        fpn_channels: 32,
        head_hidden: 32,
        anchors: 5,
    }
}

pub fn initial_boxes(seq: &Sequence) -> Vec<(u64, BBox)> {
    seq.ground_truth[0].iter().map(|(id, b)| (*id, *b)).collect()
}

/// Two identically textured squares passing each other on adjacent rows in
/// opposite directions, with per-frame pixel noise.
pub fn crossing_sequence(seed: u64) -> Sequence {
    let spec = SynthSpec {
        width: 320,
        height: 240,
        frames: 50,
        fps: 30.0,
        objects: vec![
            SynthObject {
                id: 1,
                start: BBox::new(60.0, 100.0, 40.0, 40.0),
                velocity: (4.0, 0.0),
                texture: seed,
            },
            SynthObject {
                id: 2,
                start: BBox::new(260.0, 146.0, 40.0, 40.0),
                velocity: (-4.0, 0.0),
                texture: seed,
            },
        ],
        background: [128, 128, 128],
        block: 6,
        noise: 40,
        noise_seed: seed,
    };
    synth_sequence(&spec).unwrap()
}
