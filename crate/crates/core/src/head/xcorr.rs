//! Batched depthwise correlation where target `n` only sees its own search area.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

fn dims4(t: &Tensor, what: &str) -> Result<[usize; 4]> {
    match *t.shape() {
        [n, c, h, w] => Ok([n, c, h, w]),
        _ => Err(Error::dim(format!(
            "{what}: expected rank 4, got {:?}",
            t.shape()
        ))),
    }
}

/// Valid correlation of one plane with one kernel, accumulated into `out`.
fn correlate_plane(
    s: &[f32],
    sw: usize,
    k: &[f32],
    (kh, kw): (usize, usize),
    out: &mut [f32],
    (oh, ow): (usize, usize),
) {
    for ky in 0..kh {
        for kx in 0..kw {
            let wgt = k[ky * kw + kx];
            for oy in 0..oh {
                let src = &s[(oy + ky) * sw + kx..(oy + ky) * sw + kx + ow];
                let dst = &mut out[oy * ow..(oy + 1) * ow];
                for (d, v) in dst.iter_mut().zip(src) {
                    *d += wgt * v;
                }
            }
        }
    }
}

/// `E: N×C×h×w`, `S: N×C×H×W` → `N×C×(H−h+1)×(W−w+1)`.
pub fn pairwise_depthwise_xcorr(exemplars: &Tensor, search: &Tensor) -> Result<Tensor> {
    let [n, c, kh, kw] = dims4(exemplars, "xcorr exemplar")?;
    let [sn, sc, sh, sw] = dims4(search, "xcorr search")?;
    if n != sn || c != sc {
        return Err(Error::dim(format!(
            "xcorr: exemplar {:?} vs search {:?}",
            exemplars.shape(),
            search.shape()
        )));
    }
    if kh > sh || kw > sw {
        return Err(Error::dim("xcorr: exemplar larger than search area"));
    }
    let (oh, ow) = (sh - kh + 1, sw - kw + 1);
    let mut out = vec![0.0f32; n * c * oh * ow];
    let (ks, ss, os) = (kh * kw, sh * sw, oh * ow);
    for (plane, dst) in out.chunks_exact_mut(os).enumerate() {
        let k = &exemplars.data()[plane * ks..(plane + 1) * ks];
        let s = &search.data()[plane * ss..(plane + 1) * ss];
        correlate_plane(s, sw, k, (kh, kw), dst, (oh, ow));
    }
    Tensor::new(&[n, c, oh, ow], out)
}

/// Sum over every `h × w` window of a plane, via an integral image.
fn window_sums(plane: &[f64], ph: usize, pw: usize, h: usize, w: usize) -> Vec<f64> {
    let mut integral = vec![0.0f64; (ph + 1) * (pw + 1)];
    for y in 0..ph {
        let mut row = 0.0;
        for x in 0..pw {
            row += plane[y * pw + x];
            integral[(y + 1) * (pw + 1) + x + 1] = integral[y * (pw + 1) + x + 1] + row;
        }
    }
    let (oh, ow) = (ph - h + 1, pw - w + 1);
    let at = |y: usize, x: usize| integral[y * (pw + 1) + x];
    let mut out = Vec::with_capacity(oh * ow);
    for y in 0..oh {
        for x in 0..ow {
            out.push(at(y + h, x + w) - at(y, x + w) - at(y + h, x) + at(y, x));
        }
    }
    out
}

/// Exemplars with each channel's spatial mean removed, as the correlation
/// input for [`ncc_scores`].
pub fn center_exemplars(exemplars: &Tensor) -> Result<Tensor> {
    let [n, c, h, w] = dims4(exemplars, "ncc exemplar")?;
    let mut data = exemplars.data().to_vec();
    for plane in data.chunks_exact_mut(h * w) {
        let mean = plane.iter().map(|&v| v as f64).sum::<f64>() / (h * w) as f64;
        for v in plane.iter_mut() {
            *v = (*v as f64 - mean) as f32;
        }
    }
    Tensor::new(&[n, c, h, w], data)
}

/// Normalized cross-correlation with per-channel zero mean, pooled over
/// channels and clamped to `[0, 1]`. `correlation` is the depthwise
/// correlation of the centered exemplars with `search`; returns one
/// `1 × oh × ow` map per target.
pub fn ncc_scores(centered: &Tensor, search: &Tensor, correlation: &Tensor) -> Result<Vec<Tensor>> {
    let [n, c, kh, kw] = dims4(centered, "ncc exemplar")?;
    let [_, _, sh, sw] = dims4(search, "ncc search")?;
    let [cn, cc, oh, ow] = dims4(correlation, "ncc correlation")?;
    if cn != n || cc != c || oh != sh + 1 - kh || ow != sw + 1 - kw {
        return Err(Error::dim("ncc: correlation does not match its inputs"));
    }
    let area = (kh * kw) as f64;
    let mut maps = Vec::with_capacity(n);
    for t in 0..n {
        let e = &centered.data()[t * c * kh * kw..(t + 1) * c * kh * kw];
        let e_norm = e.iter().map(|&v| (v as f64).powi(2)).sum::<f64>().sqrt();
        let s = &search.data()[t * c * sh * sw..(t + 1) * c * sh * sw];
        let mut var = vec![0.0f64; oh * ow];
        let mut energy = vec![0.0f64; oh * ow];
        for plane in s.chunks_exact(sh * sw) {
            let sum: Vec<f64> = plane.iter().map(|&v| v as f64).collect();
            let sq: Vec<f64> = plane.iter().map(|&v| (v as f64).powi(2)).collect();
            let ws = window_sums(&sum, sh, sw, kh, kw);
            let wq = window_sums(&sq, sh, sw, kh, kw);
            for i in 0..oh * ow {
                var[i] += (wq[i] - ws[i] * ws[i] / area).max(0.0);
                energy[i] += wq[i];
            }
        }
        let corr = &correlation.data()[t * c * oh * ow..(t + 1) * c * oh * ow];
        let mut out = vec![0.0f32; oh * ow];
        for (i, o) in out.iter_mut().enumerate() {
            // Flat windows (variance lost in rounding) carry no match evidence.
            if var[i] <= 1e-9 * energy[i] || e_norm <= 1e-12 {
                continue;
            }
            let num: f64 = (0..c).map(|ch| corr[ch * oh * ow + i] as f64).sum();
            *o = (num / (e_norm * var[i].sqrt())).clamp(0.0, 1.0) as f32;
        }
        maps.push(Tensor::new(&[1, oh, ow], out)?);
    }
    Ok(maps)
}
