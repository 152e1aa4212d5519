//! Dense channels-first tensors and the numeric kernels the tracker is built on.
//!
//! Every kernel here is a pure function of its inputs. Convolution and the
//! channel-mixing products go through a blocked single-precision GEMM; the
//! remaining kernels are written as direct loops.

use std::fmt;

use crate::error::{Error, Result};
use crate::geometry::BBox;

/// Dense row-major array of `f32` values with channels-first layout.
#[derive(Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f32>,
}

impl fmt::Debug for Tensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tensor")
            .field("shape", &self.shape)
            .field("len", &self.data.len())
            .finish()
    }
}

impl Tensor {
    pub fn new(shape: &[usize], data: Vec<f32>) -> Result<Self> {
        if shape.is_empty() || shape.contains(&0) {
            return Err(Error::dim(format!("invalid extents {shape:?}")));
        }
        let len: usize = shape.iter().product();
        if len != data.len() {
            return Err(Error::dim(format!(
                "extents {shape:?} need {len} elements, got {}",
                data.len()
            )));
        }
        Ok(Tensor {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn zeros(shape: &[usize]) -> Result<Self> {
        Self::filled(shape, 0.0)
    }

    pub fn filled(shape: &[usize], value: f32) -> Result<Self> {
        let len: usize = shape.iter().product();
        Self::new(shape, vec![value; len])
    }

    pub fn from_fn(shape: &[usize], mut f: impl FnMut(usize) -> f32) -> Result<Self> {
        let len: usize = shape.iter().product();
        Self::new(shape, (0..len).map(&mut f).collect())
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    /// `(channels, height, width)` of a rank-3 tensor.
    pub fn dims3(&self) -> Result<(usize, usize, usize)> {
        match self.shape[..] {
            [c, h, w] => Ok((c, h, w)),
            _ => Err(Error::dim(format!("expected rank 3, got {:?}", self.shape))),
        }
    }

    pub fn reshape(mut self, shape: &[usize]) -> Result<Self> {
        let len: usize = shape.iter().product();
        if len != self.data.len() || shape.contains(&0) {
            return Err(Error::dim(format!(
                "cannot reshape {:?} into {shape:?}",
                self.shape
            )));
        }
        self.shape = shape.to_vec();
        Ok(self)
    }

    /// Plane `c` of a rank-3 tensor.
    pub fn channel(&self, c: usize) -> &[f32] {
        let plane = self.shape[self.rank() - 1] * self.shape[self.rank() - 2];
        &self.data[c * plane..(c + 1) * plane]
    }

    /// Element `(c, y, x)` of a rank-3 tensor.
    pub fn at(&self, c: usize, y: usize, x: usize) -> f32 {
        let (h, w) = (self.shape[1], self.shape[2]);
        self.data[(c * h + y) * w + x]
    }

    pub fn set(&mut self, c: usize, y: usize, x: usize, v: f32) {
        let (h, w) = (self.shape[1], self.shape[2]);
        self.data[(c * h + y) * w + x] = v;
    }

    /// Slice `index` of the leading axis, as an owned tensor of rank-1 lower.
    pub fn slice_outer(&self, index: usize) -> Tensor {
        let inner: usize = self.shape[1..].iter().product();
        Tensor {
            shape: self.shape[1..].to_vec(),
            data: self.data[index * inner..(index + 1) * inner].to_vec(),
        }
    }

    /// Stacks equally shaped tensors along a new leading axis.
    pub fn stack(items: &[Tensor]) -> Result<Tensor> {
        let first = items
            .first()
            .ok_or_else(|| Error::dim("cannot stack zero tensors"))?;
        let mut shape = vec![items.len()];
        shape.extend_from_slice(&first.shape);
        let mut data = Vec::with_capacity(first.len() * items.len());
        for t in items {
            if t.shape != first.shape {
                return Err(Error::dim(format!(
                    "stack extents differ: {:?} vs {:?}",
                    t.shape, first.shape
                )));
            }
            data.extend_from_slice(&t.data);
        }
        Tensor::new(&shape, data)
    }

    pub fn map_inplace(&mut self, f: impl Fn(f32) -> f32) {
        for v in &mut self.data {
            *v = f(*v);
        }
    }

    pub fn relu_inplace(&mut self) {
        self.map_inplace(|v| v.max(0.0));
    }

    pub fn add_assign(&mut self, other: &Tensor) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::dim(format!("add: {:?} vs {:?}", self.shape, other.shape)));
        }
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += *b;
        }
        Ok(())
    }

    pub fn max_value(&self) -> f32 {
        self.data.iter().copied().fold(f32::NEG_INFINITY, f32::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Centered crop of the spatial extents of a rank-3 tensor.
    pub fn center_crop(&self, size: usize) -> Result<Tensor> {
        let (c, h, w) = self.dims3()?;
        if size > h || size > w || !(h - size).is_multiple_of(2) || !(w - size).is_multiple_of(2) {
            return Err(Error::dim(format!("cannot center-crop {h}x{w} to {size}x{size}")));
        }
        let (oy, ox) = ((h - size) / 2, (w - size) / 2);
        let mut out = Vec::with_capacity(c * size * size);
        for ch in 0..c {
            for y in 0..size {
                let row = (ch * h + oy + y) * w + ox;
                out.extend_from_slice(&self.data[row..row + size]);
            }
        }
        Tensor::new(&[c, size, size], out)
    }
}

/// Convolution weights with their sampling geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel2D {
    weights: Tensor,
    bias: Vec<f32>,
    stride: usize,
    padding: usize,
}

impl Kernel2D {
    pub fn new(weights: Tensor, bias: Vec<f32>, stride: usize, padding: usize) -> Result<Self> {
        let [out_c, _, kh, kw] = weights.shape()[..] else {
            return Err(Error::dim(format!(
                "kernel weights must be rank 4, got {:?}",
                weights.shape()
            )));
        };
        if kh % 2 == 0 || kw % 2 == 0 {
            return Err(Error::dim(format!("kernel extents {kh}x{kw} must be odd")));
        }
        if !(1..=2).contains(&stride) {
            return Err(Error::dim(format!("unsupported stride {stride}")));
        }
        if bias.len() != out_c {
            return Err(Error::dim(format!(
                "bias length {} != output channels {out_c}",
                bias.len()
            )));
        }
        Ok(Kernel2D {
            weights,
            bias,
            stride,
            padding,
        })
    }

    pub fn weights(&self) -> &Tensor {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut Tensor {
        &mut self.weights
    }

    pub fn bias(&self) -> &[f32] {
        &self.bias
    }

    pub fn bias_mut(&mut self) -> &mut [f32] {
        &mut self.bias
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn padding(&self) -> usize {
        self.padding
    }

    pub fn out_channels(&self) -> usize {
        self.weights.shape()[0]
    }

    pub fn in_channels(&self) -> usize {
        self.weights.shape()[1]
    }

    pub fn extent(&self) -> (usize, usize) {
        (self.weights.shape()[2], self.weights.shape()[3])
    }

    pub fn output_extent(&self, h: usize, w: usize) -> Option<(usize, usize)> {
        let (kh, kw) = self.extent();
        let (ph, pw) = (h + 2 * self.padding, w + 2 * self.padding);
        if ph < kh || pw < kw {
            return None;
        }
        Some(((ph - kh) / self.stride + 1, (pw - kw) / self.stride + 1))
    }
}

/// `C = A·B + beta·C` over row/column strided views.
#[allow(clippy::too_many_arguments)]
pub(crate) fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f32],
    (rsa, csa): (usize, usize),
    b: &[f32],
    (rsb, csb): (usize, usize),
    beta: f32,
    c: &mut [f32],
    (rsc, csc): (usize, usize),
) {
    if m == 0 || n == 0 {
        return;
    }
    let last = |rs: usize, cs: usize, r: usize, cc: usize| (r - 1) * rs + (cc - 1) * cs;
    if k > 0 {
        assert!(last(rsa, csa, m, k) < a.len(), "gemm: A out of bounds");
        assert!(last(rsb, csb, k, n) < b.len(), "gemm: B out of bounds");
    }
    assert!(last(rsc, csc, m, n) < c.len(), "gemm: C out of bounds");
    // SAFETY: the asserts above bound every strided access inside the slices,
    // and `c` is uniquely borrowed.
    unsafe {
        matrixmultiply::sgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa as isize,
            csa as isize,
            b.as_ptr(),
            rsb as isize,
            csb as isize,
            beta,
            c.as_mut_ptr(),
            rsc as isize,
            csc as isize,
        );
    }
}

// Upper bound on the im2col scratch buffer, in floats.
const IM2COL_BUDGET: usize = 1 << 21;

/// Zero-padded strided 2-D convolution (cross-correlation) of a `C×H×W` input.
pub fn conv2d(input: &Tensor, kernel: &Kernel2D) -> Result<Tensor> {
    let (c, h, w) = input.dims3()?;
    if c != kernel.in_channels() {
        return Err(Error::dim(format!(
            "conv2d: input has {c} channels, kernel expects {}",
            kernel.in_channels()
        )));
    }
    let (oh, ow) = kernel.output_extent(h, w).ok_or_else(|| {
        Error::dim(format!(
            "conv2d: {h}x{w} input too small for kernel {:?}",
            kernel.extent()
        ))
    })?;
    let out_c = kernel.out_channels();
    let (kh, kw) = kernel.extent();
    let (stride, pad) = (kernel.stride, kernel.padding);
    let kdim = c * kh * kw;
    let plane = oh * ow;
    let mut out = vec![0.0f32; out_c * plane];
    for (oc, b) in kernel.bias.iter().enumerate() {
        out[oc * plane..(oc + 1) * plane].fill(*b);
    }
    let wts = kernel.weights.data();

    if kh == 1 && kw == 1 && stride == 1 && pad == 0 {
        gemm(
            out_c,
            kdim,
            plane,
            wts,
            (kdim, 1),
            input.data(),
            (plane, 1),
            1.0,
            &mut out,
            (plane, 1),
        );
        return Tensor::new(&[out_c, oh, ow], out);
    }

    let rows_per_band = (IM2COL_BUDGET / (kdim * ow)).clamp(1, oh);
    let mut cols = vec![0.0f32; kdim * rows_per_band * ow];
    let src = input.data();
    let mut r0 = 0;
    while r0 < oh {
        let rows = rows_per_band.min(oh - r0);
        let ncols = rows * ow;
        for ci in 0..c {
            for ky in 0..kh {
                for kx in 0..kw {
                    let row = (ci * kh + ky) * kw + kx;
                    let dst = &mut cols[row * ncols..(row + 1) * ncols];
                    for r in 0..rows {
                        let iy = ((r0 + r) * stride + ky) as isize - pad as isize;
                        let line = &mut dst[r * ow..(r + 1) * ow];
                        if iy < 0 || iy >= h as isize {
                            line.fill(0.0);
                            continue;
                        }
                        let base = (ci * h + iy as usize) * w;
                        // Output columns whose source column `ox·stride + kx − pad` is in range.
                        let lo = pad.saturating_sub(kx).div_ceil(stride).min(ow);
                        let hi = if w + pad > kx {
                            ((w + pad - kx - 1) / stride + 1).min(ow)
                        } else {
                            0
                        }
                        .max(lo);
                        line[..lo].fill(0.0);
                        line[hi..].fill(0.0);
                        if hi > lo {
                            let first = base + lo * stride + kx - pad;
                            if stride == 1 {
                                line[lo..hi].copy_from_slice(&src[first..first + hi - lo]);
                            } else {
                                for (v, s) in line[lo..hi].iter_mut().zip(src[first..].iter().step_by(stride))
                                {
                                    *v = *s;
                                }
                            }
                        }
                    }
                }
            }
        }
        gemm(
            out_c,
            kdim,
            ncols,
            wts,
            (kdim, 1),
            &cols[..kdim * ncols],
            (ncols, 1),
            1.0,
            &mut out[r0 * ow..],
            (plane, 1),
        );
        r0 += rows;
    }
    Tensor::new(&[out_c, oh, ow], out)
}

/// Bilinear sample of one channel plane at continuous pixel coordinates,
/// where pixel `(i, j)` is centered at `(i + 0.5, j + 0.5)`. Samples outside
/// the plane read as zero.
#[inline]
pub(crate) fn bilinear_zero(plane: &[f32], h: usize, w: usize, y: f64, x: f64) -> f32 {
    let (ys, xs) = (y - 0.5, x - 0.5);
    let (y0, x0) = (ys.floor(), xs.floor());
    let (fy, fx) = ((ys - y0) as f32, (xs - x0) as f32);
    let (y0, x0) = (y0 as isize, x0 as isize);
    let fetch = |yy: isize, xx: isize| -> f32 {
        if yy < 0 || xx < 0 || yy >= h as isize || xx >= w as isize {
            0.0
        } else {
            plane[yy as usize * w + xx as usize]
        }
    };
    let top = fetch(y0, x0) * (1.0 - fx) + fetch(y0, x0 + 1) * fx;
    let bottom = fetch(y0 + 1, x0) * (1.0 - fx) + fetch(y0 + 1, x0 + 1) * fx;
    top * (1.0 - fy) + bottom * fy
}

/// Crop-and-resize of `region` (feature coordinates) into `out_size × out_size`
/// bins, one bilinear sample at each bin center.
pub fn roi_align(feat: &Tensor, region: &BBox, out_size: usize) -> Result<Tensor> {
    let (c, h, w) = feat.dims3()?;
    if out_size == 0 {
        return Err(Error::dim("roi_align: out_size must be positive"));
    }
    if !(region.w > 0.0 && region.h > 0.0) || !region.is_finite() {
        return Err(Error::Geometry(format!(
            "roi_align: region extents must be positive, got {region:?}"
        )));
    }
    let (x0, y0) = (region.left(), region.top());
    let bw = region.w / out_size as f64;
    let bh = region.h / out_size as f64;
    let mut out = Vec::with_capacity(c * out_size * out_size);
    for ch in 0..c {
        let plane = feat.channel(ch);
        for by in 0..out_size {
            let y = y0 + (by as f64 + 0.5) * bh;
            for bx in 0..out_size {
                let x = x0 + (bx as f64 + 0.5) * bw;
                out.push(bilinear_zero(plane, h, w, y, x));
            }
        }
    }
    Tensor::new(&[c, out_size, out_size], out)
}

/// Outer product of two length-`size` Hann windows, `w(n) = sin²(πn/(N−1))`.
pub fn hanning2d(size: usize) -> Result<Tensor> {
    if size == 0 {
        return Err(Error::dim("hanning2d: size must be positive"));
    }
    let win: Vec<f64> = if size == 1 {
        vec![1.0]
    } else {
        (0..size)
            .map(|n| {
                // Evaluated on the nearer half so the window is exactly symmetric.
                let m = n.min(size - 1 - n);
                let s = (std::f64::consts::PI * m as f64 / (size - 1) as f64).sin();
                s * s
            })
            .collect()
    };
    let mut data = Vec::with_capacity(size * size);
    for wy in &win {
        for wx in &win {
            data.push((wy * wx) as f32);
        }
    }
    Tensor::new(&[1, size, size], data)
}

/// Per-channel 3×3 minimum filter with replicated borders.
pub fn erode3x3(map: &Tensor) -> Result<Tensor> {
    let (c, h, w) = map.dims3()?;
    let mut out = Vec::with_capacity(map.len());
    for ch in 0..c {
        let plane = map.channel(ch);
        for y in 0..h {
            let (ya, yb) = (y.saturating_sub(1), (y + 1).min(h - 1));
            for x in 0..w {
                let (xa, xb) = (x.saturating_sub(1), (x + 1).min(w - 1));
                let mut m = f32::INFINITY;
                for yy in ya..=yb {
                    for v in &plane[yy * w + xa..=yy * w + xb] {
                        m = m.min(*v);
                    }
                }
                out.push(m);
            }
        }
    }
    Tensor::new(map.shape(), out)
}

/// Two-way softmax over channel pairs `(2k, 2k+1)` read as `(negative, positive)`
/// logits; returns the positive probability per anchor.
pub fn softmax_pairs(map: &Tensor) -> Result<Tensor> {
    let (c2, h, w) = map.dims3()?;
    if c2 % 2 != 0 {
        return Err(Error::dim(format!("softmax_pairs: channel count {c2} is odd")));
    }
    let k = c2 / 2;
    let mut out = Vec::with_capacity(k * h * w);
    for a in 0..k {
        let neg = map.channel(2 * a);
        let pos = map.channel(2 * a + 1);
        for (n, p) in neg.iter().zip(pos) {
            let m = n.max(*p);
            let (en, ep) = ((n - m).exp(), (p - m).exp());
            out.push(ep / (en + ep));
        }
    }
    Tensor::new(&[k, h, w], out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor {
        Tensor::from_fn(shape, |_| rng.gen_range(-1.0..1.0)).unwrap()
    }

    fn conv_oracle(input: &Tensor, k: &Kernel2D) -> Vec<f64> {
        let (c, h, w) = input.dims3().unwrap();
        let (kh, kw) = k.extent();
        let (oh, ow) = k.output_extent(h, w).unwrap();
        let (s, p) = (k.stride() as isize, k.padding() as isize);
        let wt = k.weights();
        let mut out = Vec::new();
        for oc in 0..k.out_channels() {
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut acc = k.bias()[oc] as f64;
                    for ic in 0..c {
                        for ky in 0..kh {
                            for kx in 0..kw {
                                let iy = oy as isize * s + ky as isize - p;
                                let ix = ox as isize * s + kx as isize - p;
                                if iy < 0 || ix < 0 || iy >= h as isize || ix >= w as isize {
                                    continue;
                                }
                                let wv = wt.data()[((oc * c + ic) * kh + ky) * kw + kx] as f64;
                                acc += wv * input.at(ic, iy as usize, ix as usize) as f64;
                            }
                        }
                    }
                    out.push(acc);
                }
            }
        }
        out
    }

    #[test]
    fn identity_kernel_preserves_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = random(&[1, 5, 5], &mut rng);
        let mut w = vec![0.0; 9];
        w[4] = 1.0;
        let k = Kernel2D::new(Tensor::new(&[1, 1, 3, 3], w).unwrap(), vec![0.0], 1, 1).unwrap();
        assert_eq!(conv2d(&x, &k).unwrap(), x);
    }

    #[test]
    fn channel_average_of_equal_channels() {
        let x = Tensor::filled(&[2, 4, 4], 1.0).unwrap();
        let k = Kernel2D::new(
            Tensor::new(&[1, 2, 1, 1], vec![0.5, 0.5]).unwrap(),
            vec![0.0],
            1,
            0,
        )
        .unwrap();
        let y = conv2d(&x, &k).unwrap();
        assert_eq!(y.shape(), &[1, 4, 4]);
        assert!(y.data().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn strided_padded_conv_matches_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = random(&[3, 8, 8], &mut rng);
        let k = Kernel2D::new(random(&[4, 3, 3, 3], &mut rng), vec![0.1, -0.2, 0.3, 0.0], 2, 1).unwrap();
        let y = conv2d(&x, &k).unwrap();
        assert_eq!(y.shape(), &[4, 4, 4]);
        for (a, b) in y.data().iter().zip(conv_oracle(&x, &k)) {
            assert!((*a as f64 - b).abs() < 1e-5);
        }
    }

    #[test]
    fn conv_banding_matches_oracle_on_wide_input() {
        // Large enough that the im2col buffer is split into several bands.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random(&[16, 40, 400], &mut rng);
        let k = Kernel2D::new(random(&[2, 16, 3, 3], &mut rng), vec![0.0; 2], 1, 1).unwrap();
        let y = conv2d(&x, &k).unwrap();
        for (a, b) in y.data().iter().zip(conv_oracle(&x, &k)) {
            assert!((*a as f64 - b).abs() < 1e-4);
        }
    }

    #[test]
    fn conv_rejects_channel_mismatch_and_small_input() {
        let x = Tensor::zeros(&[2, 4, 4]).unwrap();
        let k = Kernel2D::new(Tensor::zeros(&[1, 3, 3, 3]).unwrap(), vec![0.0], 1, 0).unwrap();
        assert!(matches!(conv2d(&x, &k), Err(Error::Dimension(_))));
        let x = Tensor::zeros(&[3, 2, 2]).unwrap();
        assert!(matches!(conv2d(&x, &k), Err(Error::Dimension(_))));
        assert!(Tensor::zeros(&[3, 0, 2]).is_err());
    }

    #[test]
    fn kernel_validation() {
        assert!(Kernel2D::new(Tensor::zeros(&[1, 1, 2, 3]).unwrap(), vec![0.0], 1, 0).is_err());
        assert!(Kernel2D::new(Tensor::zeros(&[1, 1, 3, 3]).unwrap(), vec![0.0], 3, 0).is_err());
        assert!(Kernel2D::new(Tensor::zeros(&[1, 1, 3, 3]).unwrap(), vec![], 1, 0).is_err());
    }

    #[test]
    fn roi_align_aligned_crop_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = random(&[2, 10, 10], &mut rng);
        let region = BBox::from_ltwh(3.0, 2.0, 4.0, 4.0);
        let y = roi_align(&x, &region, 4).unwrap();
        for c in 0..2 {
            for i in 0..4 {
                for j in 0..4 {
                    assert_eq!(y.at(c, i, j), x.at(c, 2 + i, 3 + j));
                }
            }
        }
    }

    #[test]
    fn roi_align_outside_map_is_zero() {
        let x = Tensor::filled(&[1, 8, 8], 3.0).unwrap();
        let region = BBox::new(-50.0, 40.0, 6.0, 6.0);
        let y = roi_align(&x, &region, 7).unwrap();
        assert!(y.data().iter().all(|&v| v == 0.0));
        assert!(matches!(
            roi_align(&x, &BBox::new(1.0, 1.0, 0.0, 2.0), 3),
            Err(Error::Geometry(_))
        ));
    }

    #[test]
    fn hanning_values() {
        let h3 = hanning2d(3).unwrap();
        assert_eq!(h3.at(0, 1, 1), 1.0);
        assert_eq!(h3.at(0, 0, 0), 0.0);
        assert_eq!(h3.at(0, 2, 2), 0.0);
        let h5 = hanning2d(5).unwrap();
        assert!((h5.at(0, 1, 1) - 0.25).abs() < 1e-6);
        assert_eq!(hanning2d(1).unwrap().data(), &[1.0]);
        assert!(hanning2d(0).is_err());
        let h25 = hanning2d(25).unwrap();
        for i in 0..25 {
            for j in 0..25 {
                assert_eq!(h25.at(0, i, j), h25.at(0, 24 - i, j));
                assert_eq!(h25.at(0, i, j), h25.at(0, i, 24 - j));
                assert_eq!(h25.at(0, i, j), h25.at(0, j, i));
            }
        }
    }

    #[test]
    fn erosion_cases() {
        let flat = Tensor::filled(&[1, 5, 5], 0.7).unwrap();
        assert_eq!(erode3x3(&flat).unwrap(), flat);
        let mut peak = Tensor::zeros(&[1, 5, 5]).unwrap();
        peak.set(0, 2, 2, 1.0);
        assert!(erode3x3(&peak).unwrap().data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn softmax_pair_values() {
        let t = Tensor::new(&[2, 1, 3], vec![0.0, 0.0, 2.0, 0.0, 100.0, 1.0]).unwrap();
        let p = softmax_pairs(&t).unwrap();
        assert_eq!(p.shape(), &[1, 1, 3]);
        assert!((p.data()[0] - 0.5).abs() < 1e-7);
        assert!((p.data()[1] - 1.0).abs() < 1e-6);
        let expected = 1.0 / (1.0 + 1f64.exp());
        assert!((p.data()[2] as f64 - expected).abs() < 1e-6);
        assert!(softmax_pairs(&Tensor::zeros(&[3, 2, 2]).unwrap()).is_err());
    }

    #[test]
    fn center_crop_takes_middle() {
        let t = Tensor::from_fn(&[1, 5, 5], |i| i as f32).unwrap();
        let c = t.center_crop(3).unwrap();
        assert_eq!(c.at(0, 0, 0), 6.0);
        assert_eq!(c.at(0, 2, 2), 18.0);
    }
}
