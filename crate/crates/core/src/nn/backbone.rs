use rand_chacha::ChaCha8Rng;

use super::init::conv_kernel;
use crate::error::{Error, Result};
use crate::tensor::{conv2d, Kernel2D, Tensor};

/// Shape of the four-stage residual backbone.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BackboneConfig {
    pub stage_channels: [usize; 4],
    pub blocks_per_stage: usize,
    pub input_channels: usize,
}

impl Default for BackboneConfig {
    fn default() -> Self {
        BackboneConfig {
            stage_channels: [16, 32, 64, 64],
            blocks_per_stage: 2,
            input_channels: 3,
        }
    }
}

/// `relu(x + conv2(relu(conv1(x))))`, both convolutions 3×3 with padding 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualBlock {
    pub conv1: Kernel2D,
    pub conv2: Kernel2D,
}

impl ResidualBlock {
    fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let mut y = conv2d(x, &self.conv1)?;
        y.relu_inplace();
        let mut y = conv2d(&y, &self.conv2)?;
        y.add_assign(x)?;
        y.relu_inplace();
        Ok(y)
    }
}

/// A stride-2 downsampling convolution followed by residual blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct BackboneStage {
    pub down: Kernel2D,
    pub blocks: Vec<ResidualBlock>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Backbone {
    pub config: BackboneConfig,
    pub stages: Vec<BackboneStage>,
}

pub const MIN_FRAME_EXTENT: usize = 16;

impl Backbone {
    pub fn init(config: BackboneConfig, rng: &mut ChaCha8Rng) -> Self {
        let mut in_c = config.input_channels;
        let mut stages = Vec::with_capacity(4);
        for &c in &config.stage_channels {
            let down = conv_kernel(rng, c, in_c, 3, 2, 1);
            let blocks = (0..config.blocks_per_stage)
                .map(|_| ResidualBlock {
                    conv1: conv_kernel(rng, c, c, 3, 1, 1),
                    conv2: conv_kernel(rng, c, c, 3, 1, 1),
                })
                .collect();
            stages.push(BackboneStage { down, blocks });
            in_c = c;
        }
        Backbone { config, stages }
    }

    /// Stage outputs; stage `s` (1-based) has extents `ceil(H/2^s) × ceil(W/2^s)`.
    pub fn forward(&self, frame: &Tensor) -> Result<Vec<Tensor>> {
        let (c, h, w) = frame.dims3()?;
        if c != self.config.input_channels {
            return Err(Error::dim(format!(
                "backbone expects {} input channels, got {c}",
                self.config.input_channels
            )));
        }
        if h < MIN_FRAME_EXTENT || w < MIN_FRAME_EXTENT {
            return Err(Error::dim(format!(
                "frame {h}x{w} is smaller than {MIN_FRAME_EXTENT}x{MIN_FRAME_EXTENT}"
            )));
        }
        let mut outputs = Vec::with_capacity(self.stages.len());
        let mut x = frame.clone();
        for stage in &self.stages {
            x = conv2d(&x, &stage.down)?;
            x.relu_inplace();
            for block in &stage.blocks {
                x = block.forward(&x)?;
            }
            outputs.push(x.clone());
        }
        Ok(outputs)
    }
}

pub fn backbone_forward(frame: &Tensor, backbone: &Backbone) -> Result<Vec<Tensor>> {
    backbone.forward(frame)
}
