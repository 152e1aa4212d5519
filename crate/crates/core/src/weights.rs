//! Every network parameter of the tracker, with seeded initialization and
//! conversion to and from the named-tensor weights file.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::head::HeadWeights;
use crate::nn::init::conv_kernel;
use crate::nn::{
    load_weights, save_weights, Backbone, BackboneConfig, BackboneStage, Dense, Fpn, MlpWeights,
    ResidualBlock, WeightSet,
};
use crate::proposal::{inertia_mlp, train_inertia, AttentionWeights, InertiaTraining};
use crate::tensor::{Kernel2D, Tensor};

/// Architecture hyper-parameters that are not implied by the backbone config.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkConfig {
    pub backbone: BackboneConfig,
    pub fpn_channels: usize,
    pub head_hidden: usize,
    pub anchors: usize,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            backbone: BackboneConfig::default(),
            fpn_channels: 64,
            head_hidden: 64,
            anchors: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkWeights {
    pub backbone: Backbone,
    pub fpn: Fpn,
    /// 1×1 convolution shared by every pyramid level.
    pub bridge: Kernel2D,
    pub attention: AttentionWeights,
    pub head: HeadWeights,
    pub inertia: MlpWeights,
}

impl NetworkWeights {
    /// Seeded random weights, all representable in a weights file. The inertia
    /// output layer starts at zero so an untrained predictor assumes the
    /// target stays put.
    pub fn init(cfg: &NetworkConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = cfg.fpn_channels;
        let backbone = Backbone::init(cfg.backbone.clone(), &mut rng);
        let fpn = Fpn::init(&cfg.backbone.stage_channels, c, &mut rng);
        let bridge = conv_kernel(&mut rng, c, c, 1, 1, 0);
        let attention = AttentionWeights::init(c, &mut rng);
        let head = HeadWeights::init(c, cfg.head_hidden, cfg.anchors, &mut rng);
        let mut inertia = inertia_mlp(&mut rng);
        inertia.output.weight.fill(0.0);
        inertia.output.bias.fill(0.0);
        inertia.round_to_f32();
        NetworkWeights {
            backbone,
            fpn,
            bridge,
            attention,
            head,
            inertia,
        }
    }

    /// [`NetworkWeights::init`] followed by inertia training, with the trained
    /// parameters rounded to what a weights file stores.
    pub fn init_trained(cfg: &NetworkConfig, seed: u64, training: &InertiaTraining) -> Result<Self> {
        let mut w = Self::init(cfg, seed);
        w.inertia = inertia_mlp(&mut ChaCha8Rng::seed_from_u64(seed ^ 0x001e_271a));
        train_inertia(&mut w.inertia, training)?;
        w.inertia.round_to_f32();
        Ok(w)
    }

    pub fn channels(&self) -> usize {
        self.fpn.channels()
    }

    /// Checks that the parts fit together.
    pub fn validate(&self) -> Result<()> {
        let c = self.channels();
        let fits = |k: &Kernel2D, i: usize| k.in_channels() == i;
        let ok = fits(&self.bridge, c)
            && self.bridge.out_channels() == c
            && self.attention.channels() == c
            && fits(&self.head.cls_exemplar, c)
            && fits(&self.head.reg_search, c)
            && self.head.cls_out.in_channels() == self.head.hidden()
            && self.head.reg_out.out_channels() == 4 * self.head.anchors()
            && self.inertia.input_dim() == crate::proposal::INERTIA_INPUT_DIM;
        if ok {
            Ok(())
        } else {
            Err(Error::dim("network parts have inconsistent channel counts"))
        }
    }

    pub fn to_weight_set(&self) -> WeightSet {
        let mut set = WeightSet::new();
        for (s, stage) in self.backbone.stages.iter().enumerate() {
            put_kernel(&mut set, &format!("backbone.stage{s}.down"), &stage.down);
            for (b, block) in stage.blocks.iter().enumerate() {
                put_kernel(
                    &mut set,
                    &format!("backbone.stage{s}.block{b}.conv1"),
                    &block.conv1,
                );
                put_kernel(
                    &mut set,
                    &format!("backbone.stage{s}.block{b}.conv2"),
                    &block.conv2,
                );
            }
        }
        for (i, k) in self.fpn.lateral.iter().enumerate() {
            put_kernel(&mut set, &format!("fpn.lateral{i}"), k);
        }
        for (i, k) in self.fpn.output.iter().enumerate() {
            put_kernel(&mut set, &format!("fpn.output{i}"), k);
        }
        put_kernel(&mut set, "bridge", &self.bridge);
        let a = &self.attention;
        for (name, k) in [
            ("query", &a.query),
            ("key", &a.key),
            ("value_self", &a.value_self),
            ("value_cross", &a.value_cross),
        ] {
            put_kernel(&mut set, &format!("attention.{name}"), k);
        }
        set.insert(
            "attention.alpha".into(),
            Tensor::new(&[2], vec![a.alpha_self, a.alpha_cross]).expect("two scalars"),
        );
        let h = &self.head;
        for (name, k) in [
            ("cls_exemplar", &h.cls_exemplar),
            ("cls_search", &h.cls_search),
            ("reg_exemplar", &h.reg_exemplar),
            ("reg_search", &h.reg_search),
            ("cls_out", &h.cls_out),
            ("reg_out", &h.reg_out),
        ] {
            put_kernel(&mut set, &format!("head.{name}"), k);
        }
        let m = &self.inertia;
        for (name, d) in [
            ("hidden1", &m.hidden1),
            ("hidden2", &m.hidden2),
            ("output", &m.output),
        ] {
            let w = d.weight.iter().map(|&v| v as f32).collect();
            let b = d.bias.iter().map(|&v| v as f32).collect();
            set.insert(
                format!("inertia.{name}.weight"),
                Tensor::new(&[d.outputs, d.inputs], w).expect("dense extents"),
            );
            set.insert(
                format!("inertia.{name}.bias"),
                Tensor::new(&[d.outputs], b).expect("dense extents"),
            );
        }
        set
    }

    /// Rebuilds the network; the architecture is read off the tensor extents.
    pub fn from_weight_set(set: &WeightSet) -> Result<Self> {
        let mut stages = Vec::new();
        let mut stage_channels = [0usize; 4];
        let mut blocks_per_stage = None;
        for (s, channels) in stage_channels.iter_mut().enumerate() {
            let down = get_kernel(set, &format!("backbone.stage{s}.down"), 2, 1)?;
            *channels = down.out_channels();
            let mut blocks = Vec::new();
            while set.contains_key(&format!("backbone.stage{s}.block{}.conv1.weight", blocks.len())) {
                let b = blocks.len();
                blocks.push(ResidualBlock {
                    conv1: get_kernel(set, &format!("backbone.stage{s}.block{b}.conv1"), 1, 1)?,
                    conv2: get_kernel(set, &format!("backbone.stage{s}.block{b}.conv2"), 1, 1)?,
                });
            }
            match blocks_per_stage {
                None => blocks_per_stage = Some(blocks.len()),
                Some(n) if n != blocks.len() => {
                    return Err(Error::format(
                        format!("backbone.stage{s}"),
                        "stages have different block counts",
                    ))
                }
                _ => {}
            }
            stages.push(BackboneStage { down, blocks });
        }
        let input_channels = stages[0].down.in_channels();
        let backbone = Backbone {
            config: BackboneConfig {
                stage_channels,
                blocks_per_stage: blocks_per_stage.unwrap_or(0),
                input_channels,
            },
            stages,
        };
        let fpn = Fpn {
            lateral: (0..4)
                .map(|i| get_kernel(set, &format!("fpn.lateral{i}"), 1, 0))
                .collect::<Result<_>>()?,
            output: (0..4)
                .map(|i| get_kernel(set, &format!("fpn.output{i}"), 1, 1))
                .collect::<Result<_>>()?,
        };
        let alpha = get(set, "attention.alpha")?;
        if alpha.shape() != [2] {
            return Err(Error::format("attention.alpha", "expected two scalars"));
        }
        let attention = AttentionWeights {
            query: get_kernel(set, "attention.query", 1, 0)?,
            key: get_kernel(set, "attention.key", 1, 0)?,
            value_self: get_kernel(set, "attention.value_self", 1, 0)?,
            value_cross: get_kernel(set, "attention.value_cross", 1, 0)?,
            alpha_self: alpha.data()[0],
            alpha_cross: alpha.data()[1],
        };
        let head = HeadWeights {
            cls_exemplar: get_kernel(set, "head.cls_exemplar", 1, 0)?,
            cls_search: get_kernel(set, "head.cls_search", 1, 0)?,
            reg_exemplar: get_kernel(set, "head.reg_exemplar", 1, 0)?,
            reg_search: get_kernel(set, "head.reg_search", 1, 0)?,
            cls_out: get_kernel(set, "head.cls_out", 1, 0)?,
            reg_out: get_kernel(set, "head.reg_out", 1, 0)?,
        };
        let inertia = MlpWeights {
            hidden1: get_dense(set, "inertia.hidden1")?,
            hidden2: get_dense(set, "inertia.hidden2")?,
            output: get_dense(set, "inertia.output")?,
        };
        let w = NetworkWeights {
            backbone,
            fpn,
            bridge: get_kernel(set, "bridge", 1, 0)?,
            attention,
            head,
            inertia,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        save_weights(path, &self.to_weight_set())
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_weight_set(&load_weights(path)?)
    }
}

fn put_kernel(set: &mut WeightSet, name: &str, k: &Kernel2D) {
    set.insert(format!("{name}.weight"), k.weights().clone());
    set.insert(
        format!("{name}.bias"),
        Tensor::new(&[k.bias().len()], k.bias().to_vec()).expect("non-empty bias"),
    );
}

fn get<'a>(set: &'a WeightSet, name: &str) -> Result<&'a Tensor> {
    set.get(name).ok_or_else(|| Error::format(name, "missing entry"))
}

fn get_kernel(set: &WeightSet, name: &str, stride: usize, padding: usize) -> Result<Kernel2D> {
    let w = get(set, &format!("{name}.weight"))?;
    let b = get(set, &format!("{name}.bias"))?;
    Kernel2D::new(w.clone(), b.data().to_vec(), stride, padding)
        .map_err(|e| Error::format(name, e.to_string()))
}

fn get_dense(set: &WeightSet, name: &str) -> Result<Dense> {
    let w = get(set, &format!("{name}.weight"))?;
    let b = get(set, &format!("{name}.bias"))?;
    let &[outputs, inputs] = w.shape() else {
        return Err(Error::format(name, "dense weight must be rank 2"));
    };
    if b.shape() != [outputs] {
        return Err(Error::format(name, "bias length does not match outputs"));
    }
    Ok(Dense {
        inputs,
        outputs,
        weight: w.data().iter().map(|&v| v as f64).collect(),
        bias: b.data().iter().map(|&v| v as f64).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{read_weights, write_weights};

    fn small() -> NetworkConfig {
        NetworkConfig {
            backbone: BackboneConfig {
                stage_channels: [4, 4, 8, 8],
                blocks_per_stage: 1,
                input_channels: 3,
            },
            fpn_channels: 8,
            head_hidden: 4,
            anchors: 5,
        }
    }

    #[test]
    fn seeded_init_is_reproducible() {
        assert_eq!(
            NetworkWeights::init(&small(), 7),
            NetworkWeights::init(&small(), 7)
        );
        assert_ne!(
            NetworkWeights::init(&small(), 7),
            NetworkWeights::init(&small(), 8)
        );
    }

    #[test]
    fn weight_set_round_trip() {
        let w = NetworkWeights::init(&small(), 3);
        let mut buf = Vec::new();
        write_weights(&mut buf, &w.to_weight_set()).unwrap();
        let back = NetworkWeights::from_weight_set(&read_weights(&buf[..]).unwrap()).unwrap();
        assert_eq!(back, w);
        assert_eq!(back.backbone.config, small().backbone);
    }

    #[test]
    fn missing_entry_is_named() {
        let mut set = NetworkWeights::init(&small(), 3).to_weight_set();
        set.remove("head.cls_out.bias");
        match NetworkWeights::from_weight_set(&set) {
            Err(Error::Format { location, .. }) => assert_eq!(location, "head.cls_out.bias"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
