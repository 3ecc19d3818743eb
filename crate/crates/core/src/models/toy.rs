//! Stand-in manipulation network: two stride-2 convolutions down, two
//! stride-2 transposed convolutions up, leaky ReLU between, tanh output
//! mapped to `[0, 1]`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{Graph, Var};
use crate::error::Result;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

pub const TOY_HIDDEN: usize = 8;
const KERNEL: usize = 4;
const SLOPE: f64 = 0.2;
/// Weight scale relative to `1 / sqrt(fan_in)`.
/// Large enough that the output depends strongly on the input, small enough
/// that input gradients stay coherent across images.
const WEIGHT_GAIN: f64 = 2.5;
const BIAS_STD: f64 = 0.1;

pub(super) fn param_shapes(in_channels: usize, hidden: usize) -> Vec<(String, Vec<usize>)> {
    let k = KERNEL;
    vec![
        ("enc1.weight".into(), vec![hidden, in_channels, k, k]),
        ("enc1.bias".into(), vec![hidden]),
        ("enc2.weight".into(), vec![hidden, hidden, k, k]),
        ("enc2.bias".into(), vec![hidden]),
        ("dec1.weight".into(), vec![hidden, hidden, k, k]),
        ("dec1.bias".into(), vec![hidden]),
        ("dec2.weight".into(), vec![hidden, 3, k, k]),
        ("dec2.bias".into(), vec![3]),
    ]
}

pub(super) fn init<F: Scalar>(in_channels: usize, hidden: usize, seed: u64) -> Vec<Tensor<F>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    param_shapes(in_channels, hidden)
        .into_iter()
        .map(|(name, shape)| {
            if name.ends_with("bias") {
                Tensor::normal(&shape, BIAS_STD, &mut rng)
            } else {
                let fan_in = if name.starts_with("enc") {
                    shape[1] * KERNEL * KERNEL
                } else {
                    // each transposed-conv output sees a quarter of the kernel taps
                    shape[0] * KERNEL * KERNEL / 4
                };
                Tensor::normal(&shape, WEIGHT_GAIN / (fan_in as f64).sqrt(), &mut rng)
            }
        })
        .collect()
}

pub(super) fn forward<F: Scalar>(g: &mut Graph<F>, p: &[Var], x: Var) -> Result<Var> {
    let h = g.conv2d(x, p[0], 2, 1)?;
    let h = g.channel_bias(h, p[1])?;
    let h = g.leaky_relu(h, SLOPE)?;
    let h = g.conv2d(h, p[2], 2, 1)?;
    let h = g.channel_bias(h, p[3])?;
    let h = g.leaky_relu(h, SLOPE)?;
    let h = g.conv_transpose2d(h, p[4], 2, 1)?;
    let h = g.channel_bias(h, p[5])?;
    let h = g.leaky_relu(h, SLOPE)?;
    let h = g.conv_transpose2d(h, p[6], 2, 1)?;
    let h = g.channel_bias(h, p[7])?;
    let t = g.tanh(h)?;
    let t = g.add_scalar(t, 1.0)?;
    g.scale(t, 0.5)
}
