//! Frame loop: one shared backbone/pyramid pass, then per-target search,
//! attention, a single batched correlation and score refinement.

use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::geometry::BBox;
use crate::head::{
    build_distractor_field, cell_proposals, center_exemplars, decode_proposals, distractor_mask, ncc_scores,
    pairwise_depthwise_xcorr, penalize, rpn_finish, rpn_prepare, select_box, shape_penalty, AnchorSet,
    PenaltyConfig,
};
use crate::nn::FeaturePyramid;
use crate::proposal::{
    attention_apply, attention_init, extract_exemplar, extract_search, predict_inertia, BoxHistory,
    ExemplarCache, RoiConfig,
};
use crate::tensor::{hanning2d, Tensor};
use crate::weights::NetworkWeights;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrackerConfig {
    pub roi: RoiConfig,
    pub penalty: PenaltyConfig,
    pub anchors: AnchorSet,
    /// Score with normalized correlation of the enhanced features and keep
    /// the previous size, bypassing the learned head.
    pub correlation_only: bool,
}

impl TrackerConfig {
    /// Correlation-only tracking with erosion off: normalized correlation
    /// peaks of untrained features are about one cell wide, and a 3×3
    /// minimum filter would remove the true match along with outliers.
    pub fn correlation_only() -> Self {
        let mut cfg = TrackerConfig {
            correlation_only: true,
            ..TrackerConfig::default()
        };
        cfg.penalty.erosion = false;
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        self.penalty.validate()?;
        if self.roi.score_size() != self.anchors.grid {
            return Err(Error::Argument(format!(
                "anchor grid {} does not match the {}-cell score map",
                self.anchors.grid,
                self.roi.score_size()
            )));
        }
        if self.anchors.count() == 0 {
            return Err(Error::Argument("at least one anchor ratio is required".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetState {
    pub id: u64,
    pub bbox: BBox,
    pub history: BoxHistory,
    pub cache: ExemplarCache,
    pub confidence: f64,
}

/// Instrumentation of the shared stages.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CallCounters {
    pub backbone: usize,
    pub fpn: usize,
    pub xcorr: usize,
    /// Batch size of every correlation call, in call order.
    pub xcorr_batches: Vec<usize>,
}

/// Wall-clock split of the last processed frame.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FrameTiming {
    /// Backbone and pyramid.
    pub shared: Duration,
    pub per_target: Duration,
    pub total: Duration,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackOutput {
    pub id: u64,
    pub bbox: BBox,
    /// Raw objectness at the selected cell.
    pub confidence: f64,
    /// The reported box came from the inertia predictor.
    pub fallback: bool,
}

#[derive(Debug, Clone)]
pub struct Tracker {
    config: TrackerConfig,
    weights: NetworkWeights,
    window: Tensor,
    targets: Vec<TargetState>,
    frame_size: Option<(usize, usize)>,
    frame_index: u64,
    counters: CallCounters,
    timing: FrameTiming,
}

impl Tracker {
    pub fn new(weights: NetworkWeights, config: TrackerConfig) -> Result<Self> {
        config.validate()?;
        weights.validate()?;
        if !config.correlation_only && weights.head.anchors() != config.anchors.count() {
            return Err(Error::Argument(format!(
                "head predicts {} anchors, config has {}",
                weights.head.anchors(),
                config.anchors.count()
            )));
        }
        Ok(Tracker {
            window: hanning2d(config.roi.score_size())?,
            config,
            weights,
            targets: Vec::new(),
            frame_size: None,
            frame_index: 0,
            counters: CallCounters::default(),
            timing: FrameTiming::default(),
        })
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.config
    }

    pub fn weights(&self) -> &NetworkWeights {
        &self.weights
    }

    pub fn targets(&self) -> &[TargetState] {
        &self.targets
    }

    pub fn target(&self, id: u64) -> Option<&TargetState> {
        self.targets.iter().find(|t| t.id == id)
    }

    pub fn frame_index(&self) -> u64 {
        self.frame_index
    }

    pub fn frame_size(&self) -> Option<(usize, usize)> {
        self.frame_size
    }

    pub fn counters(&self) -> &CallCounters {
        &self.counters
    }

    pub fn reset_counters(&mut self) {
        self.counters = CallCounters::default();
    }

    pub fn last_timing(&self) -> FrameTiming {
        self.timing
    }

    fn check_frame(&mut self, frame: &Tensor) -> Result<()> {
        let (_, h, w) = frame.dims3()?;
        match self.frame_size {
            Some(size) if size != (w, h) => Err(Error::dim(format!(
                "frame is {w}x{h}, tracker was initialized on {}x{}",
                size.0, size.1
            ))),
            Some(_) => Ok(()),
            None => {
                self.frame_size = Some((w, h));
                Ok(())
            }
        }
    }

    fn pyramid(&mut self, frame: &Tensor) -> Result<FeaturePyramid> {
        let (_, h, w) = frame.dims3()?;
        let stages = self.weights.backbone.forward(frame)?;
        self.counters.backbone += 1;
        let pyr = self.weights.fpn.forward(&stages, (w, h))?;
        self.counters.fpn += 1;
        Ok(pyr)
    }

    fn make_target(&self, pyr: &FeaturePyramid, id: u64, b: BBox) -> Result<TargetState> {
        let xe = extract_exemplar(pyr, &b, &self.config.roi, &self.weights.bridge)?;
        Ok(TargetState {
            id,
            bbox: b,
            history: BoxHistory::seeded(b),
            cache: attention_init(&xe, &self.weights.attention)?,
            confidence: 1.0,
        })
    }

    /// Registers targets on `frame` with one backbone pass for all of them.
    pub fn init_targets(&mut self, frame: &Tensor, boxes: &[(u64, BBox)]) -> Result<()> {
        for (i, (id, b)) in boxes.iter().enumerate() {
            if self.target(*id).is_some() || boxes[..i].iter().any(|(o, _)| o == id) {
                return Err(Error::Registry(format!("target id {id} already registered")));
            }
            b.validate()?;
        }
        self.check_frame(frame)?;
        let pyr = self.pyramid(frame)?;
        let fresh = boxes
            .iter()
            .map(|&(id, b)| self.make_target(&pyr, id, b))
            .collect::<Result<Vec<_>>>()?;
        self.targets.extend(fresh);
        Ok(())
    }

    pub fn add_target(&mut self, frame: &Tensor, id: u64, b: BBox) -> Result<()> {
        self.init_targets(frame, &[(id, b)])
    }

    pub fn remove_target(&mut self, id: u64) -> Result<TargetState> {
        let pos = self
            .targets
            .iter()
            .position(|t| t.id == id)
            .ok_or_else(|| Error::Registry(format!("unknown target id {id}")))?;
        Ok(self.targets.remove(pos))
    }

    /// Restarts target `id` from `b` on `frame`, keeping its registry slot.
    pub fn reinit_target(&mut self, frame: &Tensor, id: u64, b: BBox) -> Result<()> {
        b.validate()?;
        let pos = self
            .targets
            .iter()
            .position(|t| t.id == id)
            .ok_or_else(|| Error::Registry(format!("unknown target id {id}")))?;
        self.check_frame(frame)?;
        let pyr = self.pyramid(frame)?;
        self.targets[pos] = self.make_target(&pyr, id, b)?;
        Ok(())
    }

    /// Tracks every registered target into `frame`; outputs follow registry order.
    pub fn track_frame(&mut self, frame: &Tensor) -> Result<Vec<TrackOutput>> {
        self.track_frame_with_reinit(frame, &[])
    }

    /// As [`Tracker::track_frame`], but the listed targets are restarted from
    /// the given boxes on this frame's pyramid instead of being tracked. Their
    /// outputs echo the supplied box with confidence 1.
    pub fn track_frame_with_reinit(
        &mut self,
        frame: &Tensor,
        reinit: &[(u64, BBox)],
    ) -> Result<Vec<TrackOutput>> {
        if self.targets.is_empty() {
            return Err(Error::State("no targets registered".into()));
        }
        for (id, b) in reinit {
            if self.target(*id).is_none() {
                return Err(Error::Registry(format!("unknown target id {id}")));
            }
            b.validate()?;
        }
        self.check_frame(frame)?;
        let start = Instant::now();
        let pyr = self.pyramid(frame)?;
        let shared = start.elapsed();

        for &(id, b) in reinit {
            let pos = self.targets.iter().position(|t| t.id == id).expect("checked");
            self.targets[pos] = self.make_target(&pyr, id, b)?;
        }
        let active: Vec<usize> = (0..self.targets.len())
            .filter(|&i| !reinit.iter().any(|(id, _)| *id == self.targets[i].id))
            .collect();
        let picked = if active.is_empty() {
            Vec::new()
        } else {
            self.track_active(&pyr, &active)?
        };

        let mut outputs = Vec::with_capacity(self.targets.len());
        let mut picked = picked.into_iter();
        for (i, t) in self.targets.iter().enumerate() {
            if active.contains(&i) {
                outputs.push(picked.next().expect("one output per active target"));
            } else {
                outputs.push(TrackOutput {
                    id: t.id,
                    bbox: t.bbox,
                    confidence: 1.0,
                    fallback: false,
                });
            }
        }
        self.frame_index += 1;
        let total = start.elapsed();
        self.timing = FrameTiming {
            shared,
            per_target: total - shared,
            total,
        };
        Ok(outputs)
    }

    fn track_active(&mut self, pyr: &FeaturePyramid, active: &[usize]) -> Result<Vec<TrackOutput>> {
        let cfg = &self.config;
        let grid = cfg.roi.score_size();
        let (fw, fh) = pyr.frame_size();
        let n = active.len();
        let mut regions = Vec::with_capacity(n);
        let mut enhanced_e = Vec::with_capacity(n);
        let mut enhanced_s = Vec::with_capacity(n);
        for &i in active {
            let t = &self.targets[i];
            let placed = if t.history.len() >= 2 {
                predict_inertia(&t.history, &self.weights.inertia)?
            } else {
                t.bbox
            };
            let area = extract_search(pyr, &placed, &cfg.roi, &self.weights.bridge)?;
            let (xe, xs) = attention_apply(&t.cache, &area.features, &self.weights.attention)?;
            regions.push(area.region);
            enhanced_e.push(xe);
            enhanced_s.push(xs);
        }

        // One correlation call for the whole batch.
        let (cls_maps, proposals): (Vec<Tensor>, Vec<Vec<BBox>>) = if cfg.correlation_only {
            let centered = center_exemplars(&Tensor::stack(&enhanced_e)?)?;
            let search = Tensor::stack(&enhanced_s)?;
            let corr = pairwise_depthwise_xcorr(&centered, &search)?;
            let maps = ncc_scores(&centered, &search, &corr)?;
            let props = active
                .iter()
                .zip(&regions)
                .map(|(&i, r)| {
                    let b = &self.targets[i].bbox;
                    cell_proposals((b.w, b.h), &cfg.anchors, r)
                })
                .collect();
            (maps, props)
        } else {
            let (e, s) = rpn_prepare(&enhanced_e, &enhanced_s, &self.weights.head)?;
            let corr = pairwise_depthwise_xcorr(&e, &s)?;
            let maps = rpn_finish(&corr, &self.weights.head)?;
            let props = maps
                .iter()
                .zip(&regions)
                .map(|(m, r)| decode_proposals(&m.reg, &cfg.anchors, r))
                .collect::<Result<_>>()?;
            (maps.into_iter().map(|m| m.cls).collect(), props)
        };
        self.counters.xcorr += 1;
        self.counters.xcorr_batches.push(n);

        let field = if cfg.penalty.distractor && n > 1 {
            Some(build_distractor_field(&regions, (fw, fh), grid)?)
        } else {
            None
        };
        let ones = Tensor::filled(&[1, grid, grid], 1.0)?;
        let mut outputs = Vec::with_capacity(n);
        for (p, &i) in active.iter().enumerate() {
            let t = &mut self.targets[i];
            let cls = &cls_maps[p];
            let shape = if cfg.correlation_only || !cfg.penalty.shape {
                Tensor::filled(cls.shape(), 1.0)?
            } else {
                shape_penalty(&proposals[p], &t.bbox, cfg.penalty.beta, grid)?
            };
            let mask = match &field {
                Some(f) => distractor_mask(f, p, grid)?,
                None => ones.clone(),
            };
            let pscore = penalize(cls, &shape, &mask, &self.window, &cfg.penalty)?;
            let (picked, confidence) = select_box(&pscore, &proposals[p], cls, cfg.penalty.vote_iou)?;
            let fallback = confidence < cfg.penalty.tau;
            let reported = if fallback {
                predict_inertia(&t.history, &self.weights.inertia)?
            } else {
                picked
            };
            let reported = reported.clamp_to_frame(fw as f64, fh as f64);
            t.history.push(reported);
            t.bbox = reported;
            t.confidence = confidence;
            outputs.push(TrackOutput {
                id: t.id,
                bbox: reported,
                confidence,
                fallback,
            });
        }
        Ok(outputs)
    }
}
