//! Box geometry and the scale-invariant box-delta parameterization.

use crate::error::{Error, Result};

/// Axis-aligned box in center format.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    pub const fn new(cx: f64, cy: f64, w: f64, h: f64) -> Self {
        BBox { cx, cy, w, h }
    }

    pub fn from_ltwh(left: f64, top: f64, w: f64, h: f64) -> Self {
        BBox::new(left + w / 2.0, top + h / 2.0, w, h)
    }

    pub fn from_corners(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        BBox::new((x0 + x1) / 2.0, (y0 + y1) / 2.0, x1 - x0, y1 - y0)
    }

    /// Square of side `side` centered at `(cx, cy)`.
    pub fn square(cx: f64, cy: f64, side: f64) -> Self {
        BBox::new(cx, cy, side, side)
    }

    pub fn left(&self) -> f64 {
        self.cx - self.w / 2.0
    }

    pub fn top(&self) -> f64 {
        self.cy - self.h / 2.0
    }

    pub fn right(&self) -> f64 {
        self.cx + self.w / 2.0
    }

    pub fn bottom(&self) -> f64 {
        self.cy + self.h / 2.0
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn is_finite(&self) -> bool {
        self.cx.is_finite() && self.cy.is_finite() && self.w.is_finite() && self.h.is_finite()
    }

    pub fn is_valid(&self) -> bool {
        self.is_finite() && self.w > 0.0 && self.h > 0.0
    }

    pub fn validate(&self) -> Result<()> {
        if self.is_valid() {
            Ok(())
        } else {
            Err(Error::Geometry(format!("degenerate box {self:?}")))
        }
    }

    pub fn contains_point(&self, x: f64, y: f64) -> bool {
        x >= self.left() && x <= self.right() && y >= self.top() && y <= self.bottom()
    }

    /// All coordinates multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        BBox::new(
            self.cx * factor,
            self.cy * factor,
            self.w * factor,
            self.h * factor,
        )
    }

    /// Intersection with the `[0, width] × [0, height]` frame. A box lying
    /// wholly outside collapses to a one-pixel box at the nearest frame point.
    pub fn clamp_to_frame(&self, width: f64, height: f64) -> Self {
        let clamp_axis = |lo: f64, hi: f64, extent: f64| {
            let (a, b) = (lo.clamp(0.0, extent), hi.clamp(0.0, extent));
            if b - a >= 1.0 {
                (a, b)
            } else {
                let mid = ((a + b) / 2.0).clamp(0.5, extent - 0.5);
                (mid - 0.5, mid + 0.5)
            }
        };
        let (x0, x1) = clamp_axis(self.left(), self.right(), width);
        let (y0, y1) = clamp_axis(self.top(), self.bottom(), height);
        BBox::from_corners(x0, y0, x1, y1)
    }
}

/// Scale-invariant offsets between two boxes: center shift in units of the
/// reference extent, log ratio of extents.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BoxDelta {
    pub dx: f64,
    pub dy: f64,
    pub dw: f64,
    pub dh: f64,
}

impl BoxDelta {
    pub const ZERO: BoxDelta = BoxDelta {
        dx: 0.0,
        dy: 0.0,
        dw: 0.0,
        dh: 0.0,
    };

    pub fn new(dx: f64, dy: f64, dw: f64, dh: f64) -> Self {
        BoxDelta { dx, dy, dw, dh }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.dx, self.dy, self.dw, self.dh]
    }

    pub fn from_slice(v: &[f32]) -> Self {
        BoxDelta::new(v[0] as f64, v[1] as f64, v[2] as f64, v[3] as f64)
    }
}

/// Offsets of `cur` relative to `prev`.
pub fn encode_delta(prev: &BBox, cur: &BBox) -> BoxDelta {
    BoxDelta {
        dx: (cur.cx - prev.cx) / prev.w,
        dy: (cur.cy - prev.cy) / prev.h,
        dw: (cur.w / prev.w).ln(),
        dh: (cur.h / prev.h).ln(),
    }
}

/// Inverse of [`encode_delta`]; extents stay positive for any finite delta.
pub fn decode_delta(prev: &BBox, d: &BoxDelta) -> BBox {
    BBox {
        cx: prev.cx + d.dx * prev.w,
        cy: prev.cy + d.dy * prev.h,
        w: prev.w * d.dw.exp(),
        h: prev.h * d.dh.exp(),
    }
}

/// Intersection over union; 0 for disjoint boxes.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let iw = (a.right().min(b.right()) - a.left().max(b.left())).max(0.0);
    let ih = (a.bottom().min(b.bottom()) - a.top().max(b.top())).max(0.0);
    let inter = iw * ih;
    if inter <= 0.0 {
        return 0.0;
    }
    let union = a.area() + b.area() - inter;
    (inter / union).clamp(0.0, 1.0)
}
