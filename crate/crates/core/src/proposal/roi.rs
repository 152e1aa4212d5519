//! Square exemplar/search regions, pyramid level routing and RoI extraction.

use crate::error::Result;
use crate::geometry::BBox;
use crate::nn::FeaturePyramid;
use crate::tensor::{conv2d, roi_align, Kernel2D, Tensor};

#[derive(Debug, Clone, PartialEq)]
pub struct RoiConfig {
    /// Context factor added around the box before squaring.
    pub context: f64,
    pub canonical_search: f64,
    pub canonical_stride: f64,
    /// Level whose resolution is 1/8 of the frame.
    pub base_level: i32,
    pub min_level: usize,
    pub max_level: usize,
    /// Bins the exemplar square is resampled to before the central crop.
    pub exemplar_grid: usize,
    pub exemplar_keep: usize,
    pub search_grid: usize,
}

impl Default for RoiConfig {
    fn default() -> Self {
        RoiConfig {
            context: 0.5,
            canonical_search: 255.0,
            canonical_stride: 8.0,
            base_level: 3,
            min_level: 1,
            max_level: 4,
            exemplar_grid: 15,
            exemplar_keep: 7,
            search_grid: 31,
        }
    }
}

impl RoiConfig {
    /// Spatial extent of the correlation output.
    pub fn score_size(&self) -> usize {
        self.search_grid - self.exemplar_keep + 1
    }
}

/// Side of the square exemplar region: `sqrt((w + ζ(w+h)) · (h + ζ(w+h)))`.
pub fn exemplar_side(b: &BBox, context: f64) -> f64 {
    let pad = context * (b.w + b.h);
    ((b.w + pad) * (b.h + pad)).sqrt()
}

/// Side of the search square, sampled at the exemplar's resolution.
pub fn search_side(exemplar: f64) -> f64 {
    31.0 * exemplar / 15.0
}

/// Pyramid level for an area of `aw × ah` pixels, clamped to the configured range.
pub fn select_level(aw: f64, ah: f64, cfg: &RoiConfig) -> usize {
    let canonical = cfg.canonical_stride * (cfg.canonical_search / cfg.canonical_stride).floor();
    let raw = cfg.base_level as f64 + ((aw * ah).sqrt() / canonical).log2();
    let k = raw.floor();
    if k <= cfg.min_level as f64 {
        cfg.min_level
    } else if k >= cfg.max_level as f64 {
        cfg.max_level
    } else {
        k as usize
    }
}

/// Square regions of one target in image pixels and the level they read from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionPlan {
    pub exemplar: BBox,
    pub search: BBox,
    pub level: usize,
}

/// Plans the exemplar and search squares for `b`, clamped to the frame first.
/// Both squares route to the level selected for the search area.
pub fn plan_regions(b: &BBox, frame: (usize, usize), cfg: &RoiConfig) -> Result<RegionPlan> {
    b.validate()?;
    let c = b.clamp_to_frame(frame.0 as f64, frame.1 as f64);
    let a = exemplar_side(&c, cfg.context);
    let l = search_side(a);
    Ok(RegionPlan {
        exemplar: BBox::square(c.cx, c.cy, a),
        search: BBox::square(c.cx, c.cy, l),
        level: select_level(l, l, cfg),
    })
}

fn crop_level(pyr: &FeaturePyramid, region: &BBox, level: usize, bins: usize) -> Result<Tensor> {
    let scale = 1.0 / (1u32 << level) as f64;
    roi_align(pyr.level(level), &region.scaled(scale), bins)
}

/// Exemplar features `C × 7 × 7` for an object box.
pub fn extract_exemplar(
    pyr: &FeaturePyramid,
    b: &BBox,
    cfg: &RoiConfig,
    bridge: &Kernel2D,
) -> Result<Tensor> {
    let plan = plan_regions(b, pyr.frame_size(), cfg)?;
    let full = crop_level(pyr, &plan.exemplar, plan.level, cfg.exemplar_grid)?;
    conv2d(&full.center_crop(cfg.exemplar_keep)?, bridge)
}

/// Search-area features and the square region they cover.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchArea {
    pub features: Tensor,
    pub region: BBox,
    pub level: usize,
}

/// Search features `C × 31 × 31` around a predicted box.
pub fn extract_search(
    pyr: &FeaturePyramid,
    predicted: &BBox,
    cfg: &RoiConfig,
    bridge: &Kernel2D,
) -> Result<SearchArea> {
    let plan = plan_regions(predicted, pyr.frame_size(), cfg)?;
    let crop = crop_level(pyr, &plan.search, plan.level, cfg.search_grid)?;
    Ok(SearchArea {
        features: conv2d(&crop, bridge)?,
        region: plan.search,
        level: plan.level,
    })
}
