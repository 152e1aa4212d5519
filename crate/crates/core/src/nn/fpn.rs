use rand_chacha::ChaCha8Rng;

use super::init::conv_kernel;
use crate::error::{Error, Result};
use crate::tensor::{conv2d, Kernel2D, Tensor};

pub const PYRAMID_LEVELS: usize = 4;

/// Per-level feature maps `P1..P4` at strides 2, 4, 8 and 16, all with the
/// same channel count.
#[derive(Debug, Clone, PartialEq)]
pub struct FeaturePyramid {
    levels: Vec<Tensor>,
    channels: usize,
    frame_width: usize,
    frame_height: usize,
}

impl FeaturePyramid {
    pub fn new(levels: Vec<Tensor>, frame_width: usize, frame_height: usize) -> Result<Self> {
        if levels.len() != PYRAMID_LEVELS {
            return Err(Error::dim(format!(
                "pyramid needs {PYRAMID_LEVELS} levels, got {}",
                levels.len()
            )));
        }
        let channels = levels[0].dims3()?.0;
        for (i, t) in levels.iter().enumerate() {
            let (c, h, w) = t.dims3()?;
            let f = 1usize << (i + 1);
            if c != channels || h != frame_height.div_ceil(f) || w != frame_width.div_ceil(f) {
                return Err(Error::dim(format!(
                    "pyramid level {} has extents {:?}",
                    i + 1,
                    t.shape()
                )));
            }
        }
        Ok(FeaturePyramid {
            levels,
            channels,
            frame_width,
            frame_height,
        })
    }

    /// Level `k` in `1..=4`.
    pub fn level(&self, k: usize) -> &Tensor {
        &self.levels[k - 1]
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn frame_size(&self) -> (usize, usize) {
        (self.frame_width, self.frame_height)
    }
}

/// Top-down pyramid: 1×1 laterals into `channels`, nearest 2× upsampling of the
/// coarser merged map, 3×3 output smoothing.
#[derive(Debug, Clone, PartialEq)]
pub struct Fpn {
    pub lateral: Vec<Kernel2D>,
    pub output: Vec<Kernel2D>,
}

impl Fpn {
    pub fn init(stage_channels: &[usize; 4], channels: usize, rng: &mut ChaCha8Rng) -> Self {
        let lateral = stage_channels
            .iter()
            .map(|&c| conv_kernel(rng, channels, c, 1, 1, 0))
            .collect();
        let output = (0..PYRAMID_LEVELS)
            .map(|_| conv_kernel(rng, channels, channels, 3, 1, 1))
            .collect();
        Fpn { lateral, output }
    }

    pub fn channels(&self) -> usize {
        self.lateral[0].out_channels()
    }

    pub fn forward(&self, stages: &[Tensor], frame_size: (usize, usize)) -> Result<FeaturePyramid> {
        if stages.len() != PYRAMID_LEVELS
            || self.lateral.len() != PYRAMID_LEVELS
            || self.output.len() != PYRAMID_LEVELS
        {
            return Err(Error::dim("fpn: expected four stages and four weight pairs"));
        }
        let mut levels: Vec<Option<Tensor>> = vec![None; PYRAMID_LEVELS];
        let mut merged: Option<Tensor> = None;
        for i in (0..PYRAMID_LEVELS).rev() {
            let mut inner = conv2d(&stages[i], &self.lateral[i])?;
            if let Some(coarse) = merged.take() {
                let (_, h, w) = inner.dims3()?;
                inner.add_assign(&upsample_nearest2x(&coarse, h, w)?)?;
            }
            levels[i] = Some(conv2d(&inner, &self.output[i])?);
            merged = Some(inner);
        }
        FeaturePyramid::new(
            levels.into_iter().map(|l| l.expect("filled")).collect(),
            frame_size.0,
            frame_size.1,
        )
    }
}

pub fn fpn_forward(stages: &[Tensor], fpn: &Fpn, frame_size: (usize, usize)) -> Result<FeaturePyramid> {
    fpn.forward(stages, frame_size)
}

/// Nearest-neighbour 2× upsampling cropped to `h × w`.
pub fn upsample_nearest2x(x: &Tensor, h: usize, w: usize) -> Result<Tensor> {
    let (c, sh, sw) = x.dims3()?;
    if sh * 2 < h || sw * 2 < w {
        return Err(Error::dim(format!("upsample: {sh}x{sw} cannot cover {h}x{w}")));
    }
    let mut out = Vec::with_capacity(c * h * w);
    for ch in 0..c {
        let plane = x.channel(ch);
        for y in 0..h {
            let row = &plane[(y / 2) * sw..(y / 2 + 1) * sw];
            out.extend((0..w).map(|xx| row[xx / 2]));
        }
    }
    Tensor::new(&[c, h, w], out)
}
