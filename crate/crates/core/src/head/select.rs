//! Final box choice: penalized argmax followed by overlap voting.

use crate::error::{Error, Result};
use crate::geometry::{iou, BBox};
use crate::tensor::Tensor;

/// Index of the first maximum.
pub fn argmax(values: &[f32]) -> Option<usize> {
    let mut best: Option<(usize, f32)> = None;
    for (i, &v) in values.iter().enumerate() {
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
}

/// Picks the penalized-score peak, then averages the corners of every
/// proposal overlapping it by at least `vote_iou`, weighted by raw score.
/// Returns the voted box and the raw score at the peak.
pub fn select_box(pscore: &Tensor, proposals: &[BBox], raw: &Tensor, vote_iou: f64) -> Result<(BBox, f64)> {
    if proposals.is_empty() {
        return Err(Error::State("no proposals to select from".into()));
    }
    if pscore.len() != proposals.len() || raw.len() != proposals.len() {
        return Err(Error::dim(format!(
            "select_box: {} scores, {} raw scores, {} proposals",
            pscore.len(),
            raw.len(),
            proposals.len()
        )));
    }
    let best = argmax(pscore.data()).expect("non-empty");
    let peak = proposals[best];
    let mut acc = [0.0f64; 4];
    let mut total = 0.0;
    for (p, &s) in proposals.iter().zip(raw.data()) {
        if iou(p, &peak) >= vote_iou {
            let wgt = s as f64;
            for (a, v) in acc.iter_mut().zip([p.left(), p.top(), p.right(), p.bottom()]) {
                *a += wgt * v;
            }
            total += wgt;
        }
    }
    let confidence = raw.data()[best] as f64;
    if total <= 0.0 {
        return Ok((peak, confidence));
    }
    let [x0, y0, x1, y1] = acc.map(|v| v / total);
    Ok((BBox::from_corners(x0, y0, x1, y1), confidence))
}
