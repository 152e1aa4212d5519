//! Pairwise-depthwise region proposal head.

use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::head::xcorr::pairwise_depthwise_xcorr;
use crate::nn::init::conv_kernel;
use crate::tensor::{conv2d, softmax_pairs, Kernel2D, Tensor};

/// Per-target head outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMaps {
    /// Objectness probabilities, `K × g × g`.
    pub cls: Tensor,
    /// Anchor regressions, `4K × g × g`.
    pub reg: Tensor,
}

/// Branch-specific 3×3 specializations (unpadded) and 1×1 output heads.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadWeights {
    pub cls_exemplar: Kernel2D,
    pub cls_search: Kernel2D,
    pub reg_exemplar: Kernel2D,
    pub reg_search: Kernel2D,
    pub cls_out: Kernel2D,
    pub reg_out: Kernel2D,
}

impl HeadWeights {
    pub fn init(channels: usize, hidden: usize, anchors: usize, rng: &mut ChaCha8Rng) -> Self {
        HeadWeights {
            cls_exemplar: conv_kernel(rng, hidden, channels, 3, 1, 0),
            cls_search: conv_kernel(rng, hidden, channels, 3, 1, 0),
            reg_exemplar: conv_kernel(rng, hidden, channels, 3, 1, 0),
            reg_search: conv_kernel(rng, hidden, channels, 3, 1, 0),
            cls_out: conv_kernel(rng, 2 * anchors, hidden, 1, 1, 0),
            reg_out: conv_kernel(rng, 4 * anchors, hidden, 1, 1, 0),
        }
    }

    pub fn hidden(&self) -> usize {
        self.cls_exemplar.out_channels()
    }

    pub fn anchors(&self) -> usize {
        self.cls_out.out_channels() / 2
    }
}

/// Specializes both branches and packs them along channels, `[cls | reg]`, so
/// one depthwise correlation serves the whole batch and both branches.
pub fn rpn_prepare(
    exemplars: &[Tensor],
    searches: &[Tensor],
    weights: &HeadWeights,
) -> Result<(Tensor, Tensor)> {
    if exemplars.len() != searches.len() || exemplars.is_empty() {
        return Err(Error::dim(format!(
            "rpn: {} exemplars for {} search areas",
            exemplars.len(),
            searches.len()
        )));
    }
    let pack = |x: &Tensor, a: &Kernel2D, b: &Kernel2D| -> Result<Tensor> {
        let (ya, yb) = (conv2d(x, a)?, conv2d(x, b)?);
        let (c, h, w) = ya.dims3()?;
        let mut data = ya.into_data();
        data.extend_from_slice(yb.data());
        Tensor::new(&[2 * c, h, w], data)
    };
    let e: Vec<Tensor> = exemplars
        .iter()
        .map(|x| pack(x, &weights.cls_exemplar, &weights.reg_exemplar))
        .collect::<Result<_>>()?;
    let s: Vec<Tensor> = searches
        .iter()
        .map(|x| pack(x, &weights.cls_search, &weights.reg_search))
        .collect::<Result<_>>()?;
    Ok((Tensor::stack(&e)?, Tensor::stack(&s)?))
}

/// Splits the packed correlation back into branches and applies the output heads.
pub fn rpn_finish(correlation: &Tensor, weights: &HeadWeights) -> Result<Vec<ScoreMaps>> {
    let hidden = weights.hidden();
    let &[n, c2, h, w] = correlation.shape() else {
        return Err(Error::dim("rpn: correlation must be rank 4"));
    };
    if c2 != 2 * hidden {
        return Err(Error::dim(format!(
            "rpn: correlation has {c2} channels, head expects {}",
            2 * hidden
        )));
    }
    (0..n)
        .map(|t| {
            let packed = correlation.slice_outer(t);
            let data = packed.data();
            let split = hidden * h * w;
            let cls_in = Tensor::new(&[hidden, h, w], data[..split].to_vec())?;
            let reg_in = Tensor::new(&[hidden, h, w], data[split..].to_vec())?;
            Ok(ScoreMaps {
                cls: softmax_pairs(&conv2d(&cls_in, &weights.cls_out)?)?,
                reg: conv2d(&reg_in, &weights.reg_out)?,
            })
        })
        .collect()
}

/// Full head over `N` exemplar/search pairs (`C×7×7`, `C×31×31`).
pub fn pdrpn_forward(
    exemplars: &[Tensor],
    searches: &[Tensor],
    weights: &HeadWeights,
) -> Result<Vec<ScoreMaps>> {
    let (e, s) = rpn_prepare(exemplars, searches, weights)?;
    rpn_finish(&pairwise_depthwise_xcorr(&e, &s)?, weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor {
        Tensor::from_fn(shape, |_| rng.gen_range(-1.0..1.0)).unwrap()
    }

    #[test]
    fn output_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = HeadWeights::init(8, 6, 5, &mut rng);
        let e: Vec<Tensor> = (0..3).map(|_| random(&[8, 7, 7], &mut rng)).collect();
        let s: Vec<Tensor> = (0..3).map(|_| random(&[8, 31, 31], &mut rng)).collect();
        let maps = pdrpn_forward(&e, &s, &w).unwrap();
        assert_eq!(maps.len(), 3);
        for m in &maps {
            assert_eq!(m.cls.shape(), &[5, 25, 25]);
            assert_eq!(m.reg.shape(), &[20, 25, 25]);
            assert!(m.cls.data().iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
    }

    #[test]
    fn zero_heads_give_half_and_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut w = HeadWeights::init(4, 4, 5, &mut rng);
        for k in [&mut w.cls_out, &mut w.reg_out] {
            k.weights_mut().map_inplace(|_| 0.0);
        }
        let maps = pdrpn_forward(
            &[random(&[4, 7, 7], &mut rng)],
            &[random(&[4, 31, 31], &mut rng)],
            &w,
        )
        .unwrap();
        assert!(maps[0].cls.data().iter().all(|&v| v == 0.5));
        assert!(maps[0].reg.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn mismatched_inputs_are_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w = HeadWeights::init(4, 4, 5, &mut rng);
        let e = random(&[4, 7, 7], &mut rng);
        assert!(pdrpn_forward(std::slice::from_ref(&e), &[], &w).is_err());
        assert!(pdrpn_forward(&[e], &[random(&[3, 31, 31], &mut rng)], &w).is_err());
    }
}
