//! Cost of one tracked frame as the number of targets grows.

use std::time::Duration;

use crate::error::{Error, Result};
use crate::eval::synth::{synth_sequence, SynthObject, SynthSpec};
use crate::geometry::BBox;
use crate::tracker::{Tracker, TrackerConfig};
use crate::weights::NetworkWeights;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingRow {
    pub targets: usize,
    pub backbone_ms: f64,
    pub per_target_ms: f64,
    pub total_ms: f64,
    /// Backbone passes per tracked frame (always 1).
    pub backbone_calls_per_frame: f64,
}

fn median(mut v: Vec<Duration>) -> f64 {
    v.sort();
    let n = v.len();
    let mid = if n % 2 == 1 {
        v[n / 2].as_secs_f64()
    } else {
        (v[n / 2 - 1].as_secs_f64() + v[n / 2].as_secs_f64()) / 2.0
    };
    mid * 1000.0
}

/// `count` boxes of `side` pixels on a regular grid covering the frame.
pub fn grid_boxes(count: usize, width: usize, height: usize, side: f64) -> Vec<BBox> {
    let cols = (count as f64 * width as f64 / height as f64)
        .sqrt()
        .ceil()
        .max(1.0) as usize;
    let rows = count.div_ceil(cols);
    let (dx, dy) = (width as f64 / cols as f64, height as f64 / rows as f64);
    (0..count)
        .map(|i| {
            let (r, c) = (i / cols, i % cols);
            BBox::new(
                dx * (c as f64 + 0.5),
                dy * (r as f64 + 0.5),
                side.min(dx),
                side.min(dy),
            )
        })
        .collect()
}

/// Median timings over `repetitions` frames after one warm-up frame, for
/// each target count in `counts`.
pub fn bench_scaling(
    weights: &NetworkWeights,
    config: &TrackerConfig,
    frame: (usize, usize),
    counts: &[usize],
    repetitions: usize,
) -> Result<Vec<ScalingRow>> {
    if counts.contains(&0) || repetitions == 0 {
        return Err(Error::Argument(
            "target counts and repetitions must be positive".into(),
        ));
    }
    let (w, h) = frame;
    let mut rows = Vec::with_capacity(counts.len());
    for &n in counts {
        let boxes = grid_boxes(n, w, h, 40.0);
        let spec = SynthSpec {
            width: w,
            height: h,
            frames: repetitions + 1,
            fps: 30.0,
            objects: boxes
                .iter()
                .enumerate()
                .map(|(i, b)| SynthObject {
                    id: i as u64 + 1,
                    start: *b,
                    velocity: (1.0, 0.0),
                    texture: i as u64,
                })
                .collect(),
            background: [128, 128, 128],
            block: 6,
            noise: 0,
            noise_seed: 0,
        };
        let seq = synth_sequence(&spec)?;
        let mut tracker = Tracker::new(weights.clone(), config.clone())?;
        let init: Vec<(u64, BBox)> = seq.ground_truth[0].iter().map(|(id, b)| (*id, *b)).collect();
        tracker.init_targets(&seq.frames[0].to_tensor(), &init)?;
        tracker.track_frame(&seq.frames[1].to_tensor())?;
        tracker.reset_counters();
        let (mut shared, mut per_target, mut total) = (Vec::new(), Vec::new(), Vec::new());
        for f in 0..repetitions {
            let frame = seq.frames[1 + f % repetitions].to_tensor();
            tracker.track_frame(&frame)?;
            let t = tracker.last_timing();
            shared.push(t.shared);
            per_target.push(t.per_target);
            total.push(t.total);
        }
        rows.push(ScalingRow {
            targets: n,
            backbone_ms: median(shared),
            per_target_ms: median(per_target),
            total_ms: median(total),
            backbone_calls_per_frame: tracker.counters().backbone as f64 / repetitions as f64,
        });
    }
    Ok(rows)
}

pub fn scaling_csv(rows: &[ScalingRow]) -> String {
    let mut out = String::from("targets,backbone_ms,per_target_ms,total_ms,backbone_calls_per_frame\n");
    for r in rows {
        out.push_str(&format!(
            "{},{:.3},{:.3},{:.3},{}\n",
            r.targets, r.backbone_ms, r.per_target_ms, r.total_ms, r.backbone_calls_per_frame
        ));
    }
    out
}

pub fn scaling_table(rows: &[ScalingRow]) -> String {
    let mut out = format!(
        "{:>8} {:>12} {:>14} {:>10}\n",
        "targets", "backbone_ms", "per_target_ms", "total_ms"
    );
    for r in rows {
        out.push_str(&format!(
            "{:>8} {:>12.2} {:>14.2} {:>10.2}\n",
            r.targets, r.backbone_ms, r.per_target_ms, r.total_ms
        ));
    }
    out
}
