//! Score-map refinement: erosion, shape change, distractors and spatial window.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::BBox;
use crate::head::anchors::CANONICAL_SIDE;
use crate::tensor::{erode3x3, roi_align, Tensor};

#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyConfig {
    pub beta: f64,
    /// Weight `λ` of the spatial window in the final blend.
    pub window_influence: f64,
    pub shape: bool,
    pub distractor: bool,
    pub erosion: bool,
    pub spatial: bool,
    /// Raw confidence below which the inertia prediction is reported.
    pub tau: f64,
    pub vote_iou: f64,
}

impl Default for PenaltyConfig {
    fn default() -> Self {
        PenaltyConfig {
            beta: 0.04,
            window_influence: 0.42,
            shape: true,
            distractor: true,
            erosion: true,
            spatial: true,
            tau: 0.15,
            vote_iou: 0.8,
        }
    }
}

impl PenaltyConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::Argument(format!(
                "beta must be non-negative, got {}",
                self.beta
            )));
        }
        if !unit(self.window_influence) || !unit(self.tau) || !unit(self.vote_iou) {
            return Err(Error::Argument(
                "window influence, tau and vote IoU must lie in [0, 1]".into(),
            ));
        }
        Ok(())
    }
}

fn padded_scale(b: &BBox) -> f64 {
    let p = (b.w + b.h) / 2.0;
    ((b.w + p) * (b.h + p)).sqrt()
}

/// Aspect/scale change multiplier of one proposal against the previous box.
pub fn shape_factor(proposal: &BBox, prev: &BBox, beta: f64) -> f64 {
    let (r, rp) = (proposal.w / proposal.h, prev.w / prev.h);
    let (s, sp) = (padded_scale(proposal), padded_scale(prev));
    let change = (r / rp).max(rp / r) * (s / sp).max(sp / s);
    (-beta * (change - 1.0)).exp()
}

/// Multipliers for proposals laid out `K × g × g`.
pub fn shape_penalty(proposals: &[BBox], prev: &BBox, beta: f64, grid: usize) -> Result<Tensor> {
    let cells = grid * grid;
    if cells == 0 || !proposals.len().is_multiple_of(cells) {
        return Err(Error::dim(format!(
            "{} proposals do not tile a {grid}×{grid} grid",
            proposals.len()
        )));
    }
    let data = proposals
        .iter()
        .map(|p| shape_factor(p, prev, beta) as f32)
        .collect();
    Tensor::new(&[proposals.len() / cells, grid, grid], data)
}

/// Value of one target's bump at field coordinate `(x, y)`; `area` is the
/// target's search region in field units.
pub fn distractor_value(area: &BBox, x: f64, y: f64) -> f64 {
    let inside = (x - area.cx).abs() <= area.w / 2.0 && (y - area.cy).abs() <= area.h / 2.0;
    if !inside {
        return 1.0;
    }
    let den_w = (area.w - 1.0).max(1.0);
    let den_h = (area.h - 1.0).max(1.0);
    let sx = (PI * (area.cx - 0.5 * area.w - x) / den_w).sin();
    let sy = (PI * (area.cy - 0.5 * area.h - y) / den_h).sin();
    1.0 - (sx * sy).powi(2)
}

/// Per-target distractor model over the whole frame.
#[derive(Debug, Clone, PartialEq)]
pub struct DistractorField {
    /// `N × H_g × W_g`.
    pub field: Tensor,
    /// Image pixels to field units.
    pub scale: f64,
    /// Search regions in field units, one per channel.
    pub areas: Vec<BBox>,
}

impl DistractorField {
    pub fn targets(&self) -> usize {
        self.areas.len()
    }
}

/// Builds the field from each target's search region (image pixels).
/// Cell `(i, j)` is evaluated at its center `(i + 0.5, j + 0.5)`.
pub fn build_distractor_field(
    regions: &[BBox],
    frame: (usize, usize),
    score_size: usize,
) -> Result<DistractorField> {
    if regions.is_empty() {
        return Err(Error::Argument(
            "distractor field needs at least one target".into(),
        ));
    }
    let scale = score_size as f64 / CANONICAL_SIDE;
    let fw = (scale * frame.0 as f64).ceil().max(1.0) as usize;
    let fh = (scale * frame.1 as f64).ceil().max(1.0) as usize;
    let areas: Vec<BBox> = regions.iter().map(|r| r.scaled(scale)).collect();
    let mut data = Vec::with_capacity(areas.len() * fw * fh);
    for a in &areas {
        for j in 0..fh {
            for i in 0..fw {
                data.push(distractor_value(a, i as f64 + 0.5, j as f64 + 0.5) as f32);
            }
        }
    }
    Ok(DistractorField {
        field: Tensor::new(&[areas.len(), fh, fw], data)?,
        scale,
        areas,
    })
}

/// Minimum over the other targets' bumps, resampled into target `p`'s search
/// area at `size × size`. All ones for a single target.
pub fn distractor_mask(field: &DistractorField, p: usize, size: usize) -> Result<Tensor> {
    let n = field.targets();
    if p >= n {
        return Err(Error::Argument(format!(
            "target index {p} out of range for {n} targets"
        )));
    }
    let (_, fh, fw) = field.field.dims3()?;
    let mut mask = vec![1.0f32; size * size];
    for d in (0..n).filter(|&d| d != p) {
        // Sampled as 1 − bump so cells beyond the frame read as "no distractor".
        let bump = Tensor::from_fn(&[1, fh, fw], |i| 1.0 - field.field.data()[d * fh * fw + i])?;
        let crop = roi_align(&bump, &field.areas[p], size)?;
        for (m, b) in mask.iter_mut().zip(crop.data()) {
            *m = m.min(1.0 - b);
        }
    }
    Tensor::new(&[1, size, size], mask)
}

/// Four-stage refinement of a `K × g × g` objectness map. Disabled stages are
/// skipped; `shape` is `K × g × g`, `mask` and `window` are `1 × g × g`.
pub fn penalize(
    cls: &Tensor,
    shape: &Tensor,
    mask: &Tensor,
    window: &Tensor,
    cfg: &PenaltyConfig,
) -> Result<Tensor> {
    let (k, h, w) = cls.dims3()?;
    let plane = h * w;
    if shape.shape() != cls.shape() || mask.shape() != [1, h, w] || window.shape() != [1, h, w] {
        return Err(Error::dim(format!(
            "penalize: cls {:?}, shape {:?}, mask {:?}, window {:?}",
            cls.shape(),
            shape.shape(),
            mask.shape(),
            window.shape()
        )));
    }
    let mut p = if cfg.erosion { erode3x3(cls)? } else { cls.clone() };
    let lambda = if cfg.spatial {
        cfg.window_influence as f32
    } else {
        0.0
    };
    let data = p.data_mut();
    for a in 0..k {
        for i in 0..plane {
            let v = &mut data[a * plane + i];
            if cfg.shape {
                *v *= shape.data()[a * plane + i];
            }
            if cfg.distractor {
                *v *= mask.data()[i];
            }
            *v = (1.0 - lambda) * *v + lambda * window.data()[i];
        }
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::hanning2d;

    #[test]
    fn shape_factor_values() {
        let prev = BBox::new(0.0, 0.0, 100.0, 100.0);
        assert_eq!(shape_factor(&prev, &prev, 0.04), 1.0);
        let wide = BBox::new(0.0, 0.0, 200.0, 100.0);
        let s_term = (350.0f64 * 250.0).sqrt() / 200.0;
        let want = (-0.04 * (2.0 * s_term - 1.0)).exp();
        assert!((shape_factor(&wide, &prev, 0.04) - want).abs() < 1e-12);
        assert!((shape_factor(&wide, &prev, 0.04) - 0.924_667_010).abs() < 1e-6);
        assert_eq!(shape_factor(&wide, &prev, 0.04), shape_factor(&prev, &wide, 0.04));
    }

    #[test]
    fn bump_center_and_edges() {
        let a = BBox::new(20.0, 20.0, 10.0, 10.0);
        let s = (PI * 5.0 / 9.0).sin();
        assert!((distractor_value(&a, 20.0, 20.0) - (1.0 - s.powi(4))).abs() < 1e-12);
        assert!((distractor_value(&a, 15.0, 20.0) - 1.0).abs() < 1e-12);
        assert_eq!(distractor_value(&a, 26.0, 20.0), 1.0);
        let big = BBox::new(500.0, 500.0, 1000.0, 1000.0);
        assert!(distractor_value(&big, 500.0, 500.0) < 1e-5);
    }

    #[test]
    fn single_target_mask_is_ones() {
        let f = build_distractor_field(&[BBox::square(100.0, 100.0, 200.0)], (320, 240), 25).unwrap();
        assert_eq!(f.field.shape(), &[1, 24, 32]);
        assert!(distractor_mask(&f, 0, 25)
            .unwrap()
            .data()
            .iter()
            .all(|&v| v == 1.0));
        assert!(distractor_mask(&f, 1, 25).is_err());
    }

    #[test]
    fn penalize_no_op_and_full_window() {
        let cls = Tensor::filled(&[2, 25, 25], 0.3).unwrap();
        let ones = Tensor::filled(&[2, 25, 25], 1.0).unwrap();
        let mask = Tensor::filled(&[1, 25, 25], 1.0).unwrap();
        let hann = hanning2d(25).unwrap();
        let mut cfg = PenaltyConfig {
            window_influence: 0.0,
            ..Default::default()
        };
        assert_eq!(penalize(&cls, &ones, &mask, &hann, &cfg).unwrap(), cls);
        cfg.window_influence = 1.0;
        let p = penalize(&cls, &ones, &mask, &hann, &cfg).unwrap();
        for a in 0..2 {
            assert_eq!(&p.data()[a * 625..(a + 1) * 625], hann.data());
        }
    }

    #[test]
    fn config_validation() {
        assert!(PenaltyConfig::default().validate().is_ok());
        assert!(PenaltyConfig {
            window_influence: 1.5,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(PenaltyConfig {
            beta: -1.0,
            ..Default::default()
        }
        .validate()
        .is_err());
    }
}
