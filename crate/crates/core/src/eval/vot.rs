//! Real-time evaluation: frames arrive on a fixed clock, frames that arrive
//! while the tracker is busy are skipped and inherit the previous prediction.

use std::collections::BTreeMap;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::eval::mot::{FrameBoxes, Sequence};
use crate::geometry::{iou, BBox};
use crate::tensor::Tensor;
use crate::tracker::Tracker;

/// Sensitivity of the robustness score to the failure rate.
pub const GAMMA: f64 = 30.0;
/// Frames between a failure and the re-initialization.
pub const REINIT_DELAY: usize = 5;
pub const ROBUSTNESS_FORMULA: &str = "exp(-gamma*failures/evaluated_frames)";

/// `exp(−γ · failures / frames)`; 1 when nothing was evaluated.
pub fn robustness(failures: usize, frames: usize, gamma: f64) -> f64 {
    if frames == 0 {
        1.0
    } else {
        (-gamma * failures as f64 / frames as f64).exp()
    }
}

/// How long each processed frame occupies the tracker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LatencyModel {
    Measured,
    /// Fixed per-frame latency in milliseconds.
    Injected(f64),
}

impl LatencyModel {
    pub fn injected(ms: f64) -> Result<Self> {
        if ms >= 0.0 && ms.is_finite() {
            Ok(LatencyModel::Injected(ms))
        } else {
            Err(Error::Argument(format!(
                "injected latency must be non-negative, got {ms}"
            )))
        }
    }

    pub fn describe(&self) -> String {
        match self {
            LatencyModel::Measured => "measured".into(),
            LatencyModel::Injected(ms) => format!("injected:{ms}ms"),
        }
    }
}

/// Anything the protocol can drive.
pub trait SequenceTracker {
    fn init(&mut self, frame: &Tensor, targets: &[(u64, BBox)]) -> Result<()>;

    /// Predicts frame `index`; targets in `reinit` restart from the given box.
    fn track(&mut self, index: usize, frame: &Tensor, reinit: &[(u64, BBox)]) -> Result<FrameBoxes>;
}

impl SequenceTracker for Tracker {
    fn init(&mut self, frame: &Tensor, targets: &[(u64, BBox)]) -> Result<()> {
        self.init_targets(frame, targets)
    }

    fn track(&mut self, _index: usize, frame: &Tensor, reinit: &[(u64, BBox)]) -> Result<FrameBoxes> {
        Ok(self
            .track_frame_with_reinit(frame, reinit)?
            .into_iter()
            .map(|o| (o.id, o.bbox))
            .collect())
    }
}

/// Replays ground truth; used to check the harness itself.
#[derive(Debug, Clone)]
pub struct OracleTracker {
    pub ground_truth: Vec<FrameBoxes>,
    ids: Vec<u64>,
}

impl OracleTracker {
    pub fn new(ground_truth: Vec<FrameBoxes>) -> Self {
        OracleTracker {
            ground_truth,
            ids: Vec::new(),
        }
    }
}

impl SequenceTracker for OracleTracker {
    fn init(&mut self, _frame: &Tensor, targets: &[(u64, BBox)]) -> Result<()> {
        self.ids = targets.iter().map(|t| t.0).collect();
        Ok(())
    }

    fn track(&mut self, index: usize, _frame: &Tensor, _reinit: &[(u64, BBox)]) -> Result<FrameBoxes> {
        let gt = self
            .ground_truth
            .get(index)
            .ok_or_else(|| Error::State(format!("no ground truth for frame {index}")))?;
        Ok(self
            .ids
            .iter()
            .filter_map(|id| gt.get(id).map(|b| (*id, *b)))
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetReport {
    pub id: u64,
    /// Mean IoU over the frames counted for accuracy; `None` if there were none.
    pub accuracy: Option<f64>,
    pub robustness: f64,
    pub failures: usize,
    /// Frames on which the target was being tracked and had ground truth.
    pub evaluated_frames: usize,
    pub accuracy_frames: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub fps_budget: f64,
    pub gamma: f64,
    pub latency: LatencyModel,
    /// Unweighted mean of per-target accuracies.
    pub accuracy: f64,
    /// Unweighted mean of per-target robustness.
    pub robustness: f64,
    pub failures: usize,
    pub frames: usize,
    /// Indices of frames the tracker actually processed (frame 0 is the init).
    pub processed: Vec<usize>,
    /// Latency charged to each processed frame, in milliseconds.
    pub latencies_ms: Vec<f64>,
    pub per_target: Vec<TargetReport>,
    /// Reported box per frame and target.
    pub predictions: Vec<FrameBoxes>,
}

impl EvalReport {
    pub fn fresh_predictions(&self) -> usize {
        self.processed.len().saturating_sub(1)
    }

    pub fn skipped_frames(&self) -> usize {
        self.frames.saturating_sub(self.processed.len())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Status {
    Tracking,
    /// Waiting for re-initialization at or after the given frame.
    Failed {
        reinit_at: usize,
    },
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    iou_sum: f64,
    failures: usize,
    evaluated: usize,
    accuracy_frames: usize,
}

struct Scorer<'a> {
    seq: &'a Sequence,
    status: BTreeMap<u64, Status>,
    tally: BTreeMap<u64, Tally>,
}

impl Scorer<'_> {
    /// Scores frame `f` against `pred`; targets being restarted on `f` are skipped.
    fn score(&mut self, f: usize, pred: &FrameBoxes, restarted: &[(u64, BBox)]) {
        for (id, st) in self.status.iter_mut() {
            if restarted.iter().any(|(r, _)| r == id) {
                *st = Status::Tracking;
                continue;
            }
            if *st != Status::Tracking {
                continue;
            }
            let (Some(gt), Some(p)) = (self.seq.ground_truth[f].get(id), pred.get(id)) else {
                continue;
            };
            let t = self.tally.get_mut(id).expect("known target");
            t.evaluated += 1;
            let overlap = iou(p, gt);
            if overlap <= 0.0 {
                t.failures += 1;
                *st = Status::Failed {
                    reinit_at: f + REINIT_DELAY,
                };
            } else {
                t.iou_sum += overlap;
                t.accuracy_frames += 1;
            }
        }
    }

    fn due(&self, f: usize) -> Vec<(u64, BBox)> {
        self.status
            .iter()
            .filter_map(|(id, s)| match s {
                Status::Failed { reinit_at } if *reinit_at <= f => {
                    self.seq.ground_truth[f].get(id).map(|b| (*id, *b))
                }
                _ => None,
            })
            .collect()
    }
}

/// Runs the real-time protocol over `seq`, initializing every target present
/// in the first frame's ground truth. Frame `t` arrives at `t / fps_budget`
/// seconds; whenever the tracker is free it takes the newest arrived frame.
pub fn run_vot_rt<T: SequenceTracker>(
    tracker: &mut T,
    seq: &Sequence,
    fps_budget: f64,
    latency: LatencyModel,
) -> Result<EvalReport> {
    if !(fps_budget > 0.0 && fps_budget.is_finite()) {
        return Err(Error::Argument(format!(
            "fps budget must be positive, got {fps_budget}"
        )));
    }
    if seq.is_empty() {
        return Err(Error::Argument("sequence has no frames".into()));
    }
    if seq.ground_truth.len() != seq.len() {
        return Err(Error::dim("ground truth and frame counts differ"));
    }
    let period_us = (1e6 / fps_budget).round().max(1.0) as u64;
    let charge_us = |measured_us: u64| match latency {
        LatencyModel::Measured => measured_us,
        LatencyModel::Injected(ms) => (ms * 1000.0).round() as u64,
    };

    let init: Vec<(u64, BBox)> = seq.ground_truth[0].iter().map(|(id, b)| (*id, *b)).collect();
    if init.is_empty() {
        return Err(Error::Argument("first frame has no ground truth".into()));
    }
    tracker.init(&seq.frames[0].to_tensor(), &init)?;

    let n = seq.len();
    let mut scorer = Scorer {
        seq,
        status: init.iter().map(|(id, _)| (*id, Status::Tracking)).collect(),
        tally: init.iter().map(|(id, _)| (*id, Tally::default())).collect(),
    };
    let mut last: FrameBoxes = init.iter().copied().collect();
    let mut predictions = vec![last.clone()];
    let mut processed = vec![0usize];
    let mut latencies_ms = vec![0.0];

    // Initialization is not charged: the tracker is free when frame 0 arrives.
    let mut free_at = 0u64;
    while predictions.len() < n {
        let next = predictions.len();
        let pick = ((free_at / period_us) as usize).max(next).min(n - 1);
        for f in next..pick {
            scorer.score(f, &last, &[]);
            predictions.push(last.clone());
        }
        let reinit = scorer.due(pick);
        let t0 = Instant::now();
        let out = tracker.track(pick, &seq.frames[pick].to_tensor(), &reinit)?;
        let cost = charge_us(t0.elapsed().as_micros() as u64);
        last.extend(out);
        scorer.score(pick, &last, &reinit);
        predictions.push(last.clone());
        processed.push(pick);
        latencies_ms.push(cost as f64 / 1000.0);
        free_at = free_at.max(pick as u64 * period_us) + cost;
    }

    let per_target: Vec<TargetReport> = scorer
        .tally
        .iter()
        .map(|(id, t)| TargetReport {
            id: *id,
            accuracy: (t.accuracy_frames > 0).then(|| t.iou_sum / t.accuracy_frames as f64),
            robustness: robustness(t.failures, t.evaluated, GAMMA),
            failures: t.failures,
            evaluated_frames: t.evaluated,
            accuracy_frames: t.accuracy_frames,
        })
        .collect();
    let accs: Vec<f64> = per_target.iter().filter_map(|t| t.accuracy).collect();
    let accuracy = if accs.is_empty() {
        0.0
    } else {
        accs.iter().sum::<f64>() / accs.len() as f64
    };
    let robustness_mean = per_target.iter().map(|t| t.robustness).sum::<f64>() / per_target.len() as f64;
    Ok(EvalReport {
        fps_budget,
        gamma: GAMMA,
        latency,
        accuracy,
        robustness: robustness_mean,
        failures: per_target.iter().map(|t| t.failures).sum(),
        frames: n,
        processed,
        latencies_ms,
        per_target,
        predictions,
    })
}
