//! Seeded parameter initialization.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::tensor::{Kernel2D, Tensor};

/// Uniform(−1/√fan_in, +1/√fan_in) convolution weights with zero bias.
pub fn conv_kernel(
    rng: &mut ChaCha8Rng,
    out_c: usize,
    in_c: usize,
    k: usize,
    stride: usize,
    padding: usize,
) -> Kernel2D {
    let fan_in = (in_c * k * k) as f32;
    let bound = 1.0 / fan_in.sqrt();
    let weights = Tensor::from_fn(&[out_c, in_c, k, k], |_| rng.gen_range(-bound..bound))
        .expect("positive kernel extents");
    Kernel2D::new(weights, vec![0.0; out_c], stride, padding).expect("valid kernel geometry")
}

/// Uniform(−1/√fan_in, +1/√fan_in) values for a dense layer of `len` entries.
pub fn uniform_vec(rng: &mut ChaCha8Rng, len: usize, fan_in: usize) -> Vec<f64> {
    let bound = 1.0 / (fan_in as f64).sqrt();
    (0..len).map(|_| rng.gen_range(-bound..bound)).collect()
}
