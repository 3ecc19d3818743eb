//! U-Net perturbation generator.
//!
//! Level `j` of the encoder halves the resolution with a 4x4 stride-2
//! convolution to `base * min(2^j, 8)` channels; every level but the first is
//! preceded by leaky ReLU(0.2). The decoder mirrors it with ReLU followed by a
//! 4x4 stride-2 transposed convolution, concatenating the encoder activation
//! of the same level before each step except the innermost. No normalization;
//! the output is linear.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::params::{Arch, Conditioning, ModelParams};
use crate::autodiff::{Graph, Var};
use crate::error::{shape_err, Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

const KERNEL: usize = 4;
const INIT_STD: f64 = 0.02;
const MAX_DEPTH: usize = 6;

/// Depth used for a square-ish input: `floor(log2(min(h, w))) - 2`, clamped to `1..=6`.
/// 256 pixels give 6 levels, 64 give 4.
pub fn depth_for(h: usize, w: usize) -> usize {
    let m = h.min(w).max(1);
    let log = usize::BITS as usize - 1 - m.leading_zeros() as usize;
    log.saturating_sub(2).clamp(1, MAX_DEPTH)
}

fn width(base: usize, level: usize) -> usize {
    base * (1usize << level.min(3))
}

pub(super) fn param_shapes(base: usize, depth: usize, in_channels: usize) -> Vec<(String, Vec<usize>)> {
    let k = KERNEL;
    let mut out = Vec::new();
    for j in 0..depth {
        let cin = if j == 0 { in_channels } else { width(base, j - 1) };
        let cout = width(base, j);
        out.push((format!("down{j}.weight"), vec![cout, cin, k, k]));
        out.push((format!("down{j}.bias"), vec![cout]));
    }
    for j in (0..depth).rev() {
        let cin = if j == depth - 1 { width(base, j) } else { 2 * width(base, j) };
        let cout = if j == 0 { 3 } else { width(base, j - 1) };
        out.push((format!("up{j}.weight"), vec![cin, cout, k, k]));
        out.push((format!("up{j}.bias"), vec![cout]));
    }
    out
}

/// Generator with `base_width` channels at the first level, sized for `h x w` inputs.
pub fn unet_generator<F: Scalar>(
    base_width: usize,
    h: usize,
    w: usize,
    conditioning: Conditioning,
    seed: u64,
) -> Result<ModelParams<F>> {
    if ![8, 16, 32, 64].contains(&base_width) {
        return Err(Error::InvalidArgument(format!("base width {base_width} not in 8, 16, 32, 64")));
    }
    let depth = depth_for(h, w);
    let unit = 1 << depth;
    if h % unit != 0 || w % unit != 0 {
        return shape_err("unet_generator", format!("{h}x{w} is not divisible by {unit}"));
    }
    let arch = Arch::UNet { base_width, depth, conditioning };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tensors = arch
        .param_shapes()
        .into_iter()
        .map(|(name, shape)| {
            if name.ends_with("bias") {
                Tensor::zeros(&shape)
            } else {
                Tensor::normal(&shape, INIT_STD, &mut rng)
            }
        })
        .collect();
    ModelParams::new(arch, seed, tensors)
}

pub(super) fn forward<F: Scalar>(g: &mut Graph<F>, p: &[Var], x: Var, depth: usize) -> Result<Var> {
    let (_, _, h, w) = g.value(x).dims4()?;
    let unit = 1 << depth;
    if h % unit != 0 || w % unit != 0 {
        return shape_err("unet", format!("{h}x{w} is not divisible by {unit}"));
    }
    let mut skips = Vec::with_capacity(depth);
    let mut cur = x;
    for j in 0..depth {
        let input = if j == 0 { cur } else { g.leaky_relu(cur, 0.2)? };
        let y = g.conv2d(input, p[2 * j], 2, 1)?;
        cur = g.channel_bias(y, p[2 * j + 1])?;
        skips.push(cur);
    }
    for (step, j) in (0..depth).rev().enumerate() {
        let input = if j == depth - 1 { cur } else { g.concat_channels(cur, skips[j])? };
        let a = g.relu(input)?;
        let base = 2 * depth + 2 * step;
        let y = g.conv_transpose2d(a, p[base], 2, 1)?;
        cur = g.channel_bias(y, p[base + 1])?;
    }
    Ok(cur)
}

/// Builds `delta = gen(input)` and `protected = clamp(x + clamp(delta, -eps, eps), 0, 1)`
/// inside `g`. `global` is required exactly when the generator is conditioned on it.
pub fn protect_graph<F: Scalar>(
    g: &mut Graph<F>,
    gen: &ModelParams<F>,
    gen_vars: &[Var],
    x: Var,
    global: Option<Var>,
    eps: f64,
) -> Result<(Var, Var)> {
    let Arch::UNet { conditioning, .. } = gen.arch else {
        return Err(Error::InvalidArgument("protection needs a generator".into()));
    };
    let input = match (conditioning, global) {
        (Conditioning::ImageAndGlobal, Some(d)) => {
            if g.value(d).shape() != g.value(x).shape() {
                return shape_err(
                    "apply_protection",
                    format!("global {:?} vs image {:?}", g.value(d).shape(), g.value(x).shape()),
                );
            }
            g.concat_channels(x, d)?
        }
        (Conditioning::ImageOnly, _) => x,
        (Conditioning::ImageAndGlobal, None) => {
            return Err(Error::InvalidArgument("generator expects a global perturbation".into()))
        }
    };
    let delta = gen.forward(g, gen_vars, input)?;
    let bounded = g.clamp(delta, -eps, eps)?;
    let sum = g.add(x, bounded)?;
    let protected = g.clamp(sum, 0.0, 1.0)?;
    Ok((delta, protected))
}

/// Runs the generator once: returns the raw perturbation and the protected image.
pub fn apply_protection<F: Scalar>(
    gen: &ModelParams<F>,
    img: &Tensor<F>,
    global: Option<&Tensor<F>>,
    eps: f64,
) -> Result<(Tensor<F>, Tensor<F>)> {
    let mut g = Graph::new();
    let vars = gen.bind(&mut g, false);
    let x = g.constant(img.clone());
    let d = global.map(|t| g.constant(t.clone()));
    let (delta, protected) = protect_graph(&mut g, gen, &vars, x, d, eps)?;
    Ok((g.value(delta).clone(), g.value(protected).clone()))
}
