//! Anchor grid over the canonical search square and proposal decoding.

use crate::error::{Error, Result};
use crate::geometry::{decode_delta, BBox, BoxDelta};
use crate::tensor::Tensor;

/// Side of the canonical search square anchors live in.
pub const CANONICAL_SIDE: f64 = 255.0;

#[derive(Debug, Clone, PartialEq)]
pub struct AnchorSet {
    /// Height-to-width ratios, one anchor per ratio and cell.
    pub ratios: Vec<f64>,
    pub base_size: f64,
    pub grid: usize,
    /// Canonical pixels between neighbouring cells.
    pub stride: f64,
}

impl Default for AnchorSet {
    fn default() -> Self {
        AnchorSet {
            ratios: vec![1.0 / 3.0, 0.5, 1.0, 2.0, 3.0],
            base_size: 64.0,
            grid: 25,
            // One score cell advances one search bin: 255/31 canonical pixels.
            stride: CANONICAL_SIDE / 31.0,
        }
    }
}

impl AnchorSet {
    pub fn count(&self) -> usize {
        self.ratios.len()
    }

    /// Canonical coordinate of cell `index` along one axis.
    pub fn cell_center(&self, index: usize) -> f64 {
        let mid = (self.grid as f64 - 1.0) / 2.0;
        CANONICAL_SIDE / 2.0 + (index as f64 - mid) * self.stride
    }

    /// Anchor `k` at cell `(row, col)` in canonical coordinates.
    pub fn anchor(&self, k: usize, row: usize, col: usize) -> BBox {
        let r = self.ratios[k];
        let w = (self.base_size * self.base_size / r).sqrt();
        BBox::new(self.cell_center(col), self.cell_center(row), w, w * r)
    }

    /// All anchors in `k, row, col` order.
    pub fn all(&self) -> Vec<BBox> {
        let g = self.grid;
        let mut out = Vec::with_capacity(self.count() * g * g);
        for k in 0..self.count() {
            for row in 0..g {
                for col in 0..g {
                    out.push(self.anchor(k, row, col));
                }
            }
        }
        out
    }
}

/// Maps a canonical box into image pixels of the search square `region`.
pub fn canonical_to_image(b: &BBox, region: &BBox) -> BBox {
    let s = region.w / CANONICAL_SIDE;
    BBox::new(
        region.left() + b.cx * s,
        region.top() + b.cy * s,
        b.w * s,
        b.h * s,
    )
}

/// Decodes a `4K × g × g` regression map (channels `4k + {dx, dy, dw, dh}`)
/// into image-pixel proposals, in `k, row, col` order.
pub fn decode_proposals(reg: &Tensor, anchors: &AnchorSet, region: &BBox) -> Result<Vec<BBox>> {
    let (c, h, w) = reg.dims3()?;
    let g = anchors.grid;
    if c != 4 * anchors.count() || h != g || w != g {
        return Err(Error::dim(format!(
            "regression map {:?} does not fit {} anchors on a {g}×{g} grid",
            reg.shape(),
            anchors.count()
        )));
    }
    let mut out = Vec::with_capacity(anchors.count() * g * g);
    for k in 0..anchors.count() {
        let ch: [&[f32]; 4] = std::array::from_fn(|i| reg.channel(4 * k + i));
        for row in 0..g {
            for col in 0..g {
                let i = row * g + col;
                let d = BoxDelta::new(ch[0][i] as f64, ch[1][i] as f64, ch[2][i] as f64, ch[3][i] as f64);
                let canonical = decode_delta(&anchors.anchor(k, row, col), &d);
                out.push(canonical_to_image(&canonical, region));
            }
        }
    }
    Ok(out)
}

/// Fixed-size proposals centered on every cell, for scoring without regression.
pub fn cell_proposals(size: (f64, f64), anchors: &AnchorSet, region: &BBox) -> Vec<BBox> {
    let g = anchors.grid;
    let s = region.w / CANONICAL_SIDE;
    let mut out = Vec::with_capacity(g * g);
    for row in 0..g {
        for col in 0..g {
            out.push(BBox::new(
                region.left() + anchors.cell_center(col) * s,
                region.top() + anchors.cell_center(row) * s,
                size.0,
                size.1,
            ));
        }
    }
    out
}
