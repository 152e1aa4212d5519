//! Channel-wise self- and cross-attention between an exemplar and its search
//! area, with the exemplar side computed once and cached.

use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::nn::init::conv_kernel;
use crate::tensor::{conv2d, gemm, Kernel2D, Tensor};

const NORM_FLOOR: f32 = 1e-12;

/// Shared projections for both branches plus the two combination scalars.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionWeights {
    pub query: Kernel2D,
    pub key: Kernel2D,
    pub value_self: Kernel2D,
    pub value_cross: Kernel2D,
    pub alpha_self: f32,
    pub alpha_cross: f32,
}

impl AttentionWeights {
    /// Random projections; both combination scalars start at zero so the
    /// module passes features through unchanged until trained.
    pub fn init(channels: usize, rng: &mut ChaCha8Rng) -> Self {
        AttentionWeights {
            query: conv_kernel(rng, channels, channels, 1, 1, 0),
            key: conv_kernel(rng, channels, channels, 1, 1, 0),
            value_self: conv_kernel(rng, channels, channels, 1, 1, 0),
            value_cross: conv_kernel(rng, channels, channels, 1, 1, 0),
            alpha_self: 0.0,
            alpha_cross: 0.0,
        }
    }

    pub fn channels(&self) -> usize {
        self.query.out_channels()
    }
}

/// Tensors reused for every frame after the exemplar is extracted.
#[derive(Debug, Clone, PartialEq)]
pub struct ExemplarCache {
    /// Raw exemplar features `X_E`.
    pub features: Tensor,
    /// Self-attended exemplar features `A_E · V_E^s`.
    pub self_attended: Tensor,
    /// Cross-attention value projection `V_E^c`.
    pub cross_value: Tensor,
    /// Row-stochastic channel attention `A_E`, `C × C`.
    pub attention: Tensor,
}

/// Row-wise softmax of the cosine similarity between the channel descriptors
/// (each channel flattened over space) of `query` and `key`.
pub fn channel_attention(query: &Tensor, key: &Tensor) -> Result<Tensor> {
    let (c, h, w) = query.dims3()?;
    if key.shape() != query.shape() {
        return Err(Error::dim(format!(
            "attention: query {:?} vs key {:?}",
            query.shape(),
            key.shape()
        )));
    }
    let p = h * w;
    let mut sim = vec![0.0f32; c * c];
    gemm(
        c,
        p,
        c,
        query.data(),
        (p, 1),
        key.data(),
        (1, p),
        0.0,
        &mut sim,
        (c, 1),
    );
    let norm = |t: &Tensor, ch: usize| {
        t.channel(ch)
            .iter()
            .map(|v| v * v)
            .sum::<f32>()
            .sqrt()
            .max(NORM_FLOOR)
    };
    let qn: Vec<f32> = (0..c).map(|i| norm(query, i)).collect();
    let kn: Vec<f32> = (0..c).map(|j| norm(key, j)).collect();
    for (i, row) in sim.chunks_exact_mut(c).enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v /= qn[i] * kn[j];
        }
        let m = row.iter().copied().fold(f32::NEG_INFINITY, f32::max);
        let mut total = 0.0;
        for v in row.iter_mut() {
            *v = (*v - m).exp();
            total += *v;
        }
        for v in row.iter_mut() {
            *v /= total;
        }
    }
    Tensor::new(&[c, c], sim)
}

/// `out[i] = Σ_j attention[i, j] · value[j]` over channels.
pub fn mix_channels(attention: &Tensor, value: &Tensor) -> Result<Tensor> {
    let (c, h, w) = value.dims3()?;
    if attention.shape() != [c, c] {
        return Err(Error::dim(format!(
            "attention {:?} cannot mix {c} channels",
            attention.shape()
        )));
    }
    let p = h * w;
    let mut out = vec![0.0f32; c * p];
    gemm(
        c,
        c,
        p,
        attention.data(),
        (c, 1),
        value.data(),
        (p, 1),
        0.0,
        &mut out,
        (p, 1),
    );
    Tensor::new(&[c, h, w], out)
}

fn check_channels(x: &Tensor, weights: &AttentionWeights) -> Result<()> {
    let (c, _, _) = x.dims3()?;
    if c != weights.channels() {
        return Err(Error::dim(format!(
            "attention weights expect {} channels, got {c}",
            weights.channels()
        )));
    }
    Ok(())
}

/// Builds the exemplar-side cache.
pub fn attention_init(exemplar: &Tensor, weights: &AttentionWeights) -> Result<ExemplarCache> {
    check_channels(exemplar, weights)?;
    let q = conv2d(exemplar, &weights.query)?;
    let k = conv2d(exemplar, &weights.key)?;
    let v_self = conv2d(exemplar, &weights.value_self)?;
    let attention = channel_attention(&q, &k)?;
    Ok(ExemplarCache {
        features: exemplar.clone(),
        self_attended: mix_channels(&attention, &v_self)?,
        cross_value: conv2d(exemplar, &weights.value_cross)?,
        attention,
    })
}

/// `x + α_s·self + α_c·cross`, in one pass.
fn combine(x: &Tensor, self_att: &Tensor, cross_att: &Tensor, alpha_s: f32, alpha_c: f32) -> Tensor {
    let data = x
        .data()
        .iter()
        .zip(self_att.data())
        .zip(cross_att.data())
        .map(|((x, s), c)| x + alpha_s * s + alpha_c * c)
        .collect();
    Tensor::new(x.shape(), data).expect("same extents")
}

/// Enhanced exemplar and search features for one target.
pub fn attention_apply(
    cache: &ExemplarCache,
    search: &Tensor,
    weights: &AttentionWeights,
) -> Result<(Tensor, Tensor)> {
    check_channels(search, weights)?;
    if cache.features.dims3()?.0 != search.dims3()?.0 {
        return Err(Error::dim("exemplar cache and search channels differ"));
    }
    let q = conv2d(search, &weights.query)?;
    let k = conv2d(search, &weights.key)?;
    let v_self = conv2d(search, &weights.value_self)?;
    let v_cross = conv2d(search, &weights.value_cross)?;
    let a_search = channel_attention(&q, &k)?;

    let search_self = mix_channels(&a_search, &v_self)?;
    let search_cross = mix_channels(&cache.attention, &v_cross)?;
    let exemplar_cross = mix_channels(&a_search, &cache.cross_value)?;

    let exemplar_out = combine(
        &cache.features,
        &cache.self_attended,
        &exemplar_cross,
        weights.alpha_self,
        weights.alpha_cross,
    );
    let search_out = combine(
        search,
        &search_self,
        &search_cross,
        weights.alpha_self,
        weights.alpha_cross,
    );
    Ok((exemplar_out, search_out))
}
