//! Central finite-difference checks for graph-built functions.
//!
//! Everything here runs in `f64`: with `h = 1e-6` the truncation and
//! round-off errors of a central difference are both around `1e-10`, which
//! leaves room for the `1e-4` agreement the checks demand.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{Graph, LossKind, Var};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Comparison of analytic and numeric derivatives.
#[derive(Clone, Debug)]
pub struct GradCheck {
    pub analytic: Vec<f64>,
    pub numeric: Vec<f64>,
    /// `|a - n| / max(|a|, |n|)` over the compared vectors; 0 when both vanish.
    pub rel_error: f64,
}

impl GradCheck {
    fn new(analytic: Vec<f64>, numeric: Vec<f64>) -> Self {
        let rel_error = relative_error(&analytic, &numeric);
        Self { analytic, numeric, rel_error }
    }
}

pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let scale = norm(a).max(norm(b));
    if scale == 0.0 {
        0.0
    } else {
        norm(&diff) / scale
    }
}

fn eval<B>(build: &B, inputs: &[Tensor<f64>], grad: bool) -> Result<(f64, Option<Vec<Tensor<f64>>>)>
where
    B: Fn(&mut Graph<f64>, &[Var]) -> Result<Var>,
{
    let mut g = Graph::new();
    let vars: Vec<Var> = inputs.iter().map(|t| g.leaf(t.clone(), grad)).collect();
    let root = build(&mut g, &vars)?;
    let value = g.value(root);
    if value.numel() != 1 {
        return Err(Error::NonScalarRoot(value.shape().to_vec()));
    }
    let loss = value.item();
    if !grad {
        return Ok((loss, None));
    }
    let mut grads = g.backward(root)?;
    let gs = vars
        .iter()
        .zip(inputs)
        .map(|(v, t)| grads.take(*v).unwrap_or_else(|| Tensor::zeros(t.shape())))
        .collect();
    Ok((loss, Some(gs)))
}

/// Full gradient check: perturbs every coordinate of every input.
pub fn check_full<B>(build: B, inputs: &[Tensor<f64>], h: f64) -> Result<GradCheck>
where
    B: Fn(&mut Graph<f64>, &[Var]) -> Result<Var>,
{
    let (_, grads) = eval(&build, inputs, true)?;
    let analytic: Vec<f64> = grads.unwrap().iter().flat_map(|t| t.data().to_vec()).collect();
    let mut numeric = Vec::with_capacity(analytic.len());
    let mut work = inputs.to_vec();
    for t in 0..work.len() {
        for j in 0..work[t].numel() {
            let orig = work[t].data()[j];
            work[t].data_mut()[j] = orig + h;
            let up = eval(&build, &work, false)?.0;
            work[t].data_mut()[j] = orig - h;
            let down = eval(&build, &work, false)?.0;
            work[t].data_mut()[j] = orig;
            numeric.push((up - down) / (2.0 * h));
        }
    }
    Ok(GradCheck::new(analytic, numeric))
}

/// Directional check along `directions` random unit-variance directions.
/// Each direction yields one analytic/numeric pair; cheap for large inputs.
pub fn check_directional<B>(build: B, inputs: &[Tensor<f64>], h: f64, directions: usize, seed: u64) -> Result<GradCheck>
where
    B: Fn(&mut Graph<f64>, &[Var]) -> Result<Var>,
{
    let (_, grads) = eval(&build, inputs, true)?;
    let grads = grads.unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut analytic = Vec::with_capacity(directions);
    let mut numeric = Vec::with_capacity(directions);
    for _ in 0..directions {
        let dirs: Vec<Tensor<f64>> = inputs
            .iter()
            .map(|t| Tensor::from_fn(t.shape(), |_| if rng.random::<bool>() { 1.0 } else { -1.0 }))
            .collect();
        let along: f64 = grads.iter().zip(&dirs).map(|(g, d)| g.dot(d).unwrap()).sum();
        let shifted = |sign: f64| -> Vec<Tensor<f64>> {
            inputs
                .iter()
                .zip(&dirs)
                .map(|(t, d)| t.zip_map(d, |x, v| x + sign * h * v).unwrap())
                .collect()
        };
        let up = eval(&build, &shifted(1.0), false)?.0;
        let down = eval(&build, &shifted(-1.0), false)?.0;
        analytic.push(along);
        numeric.push((up - down) / (2.0 * h));
    }
    Ok(GradCheck::new(analytic, numeric))
}

/// One differentiable primitive wired into a scalar-valued probe.
pub struct PrimitiveCase {
    pub name: &'static str,
    pub shapes: Vec<Vec<usize>>,
    pub build: fn(&mut Graph<f64>, &[Var]) -> Result<Var>,
}

/// `sum(w * y)` with fixed, non-uniform weights so every output element
/// contributes a distinct slope.
pub fn weighted_sum(g: &mut Graph<f64>, y: Var) -> Result<Var> {
    let shape = g.value(y).shape().to_vec();
    let w = g.constant(Tensor::from_fn(&shape, |i| (0.7 * i as f64 + 0.3).sin() + 0.1));
    let p = g.mul(y, w)?;
    g.sum(p)
}

fn scalar_probe(g: &mut Graph<f64>, y: Var) -> Result<Var> {
    if g.value(y).numel() == 1 {
        g.scale(y, 1.7)
    } else {
        weighted_sum(g, y)
    }
}

macro_rules! case {
    ($name:expr, [$($shape:expr),*], |$g:ident, $v:ident| $body:expr) => {
        PrimitiveCase {
            name: $name,
            shapes: vec![$($shape.to_vec()),*],
            build: |$g: &mut Graph<f64>, $v: &[Var]| {
                let y = $body?;
                scalar_probe($g, y)
            },
        }
    };
}

/// Every primitive the engine differentiates. True rounding and the
/// straight-through mode are excluded: their backward rules deliberately
/// differ from the derivative of their forward pass.
pub fn primitive_cases() -> Vec<PrimitiveCase> {
    use crate::autodiff::{Reduction, UnaryOp};
    use crate::jpeg::{dct_matrix, RoundMode, RGB_TO_YCBCR, YCBCR_OFFSET};
    let img = [2usize, 3, 4, 6];
    vec![
        case!("add", [[3, 4], [3, 4]], |g, v| g.add(v[0], v[1])),
        case!("add_scalar_operand", [[3, 4], [1]], |g, v| g.add(v[0], v[1])),
        case!("sub", [[3, 4], [3, 4]], |g, v| g.sub(v[0], v[1])),
        case!("mul", [[3, 4], [3, 4]], |g, v| g.mul(v[0], v[1])),
        case!("mul_scalar_operand", [[1], [3, 4]], |g, v| g.mul(v[0], v[1])),
        case!("neg", [[5]], |g, v| g.unary(UnaryOp::Neg, v[0])),
        case!("scale", [[5]], |g, v| g.scale(v[0], -2.5)),
        case!("add_constant", [[5]], |g, v| g.add_scalar(v[0], 3.0)),
        case!("sin", [[7]], |g, v| g.sin(v[0])),
        case!("tanh", [[7]], |g, v| g.tanh(v[0])),
        case!("leaky_relu", [[9]], |g, v| g.leaky_relu(v[0], 0.2)),
        case!("relu", [[9]], |g, v| g.relu(v[0])),
        case!("clamp", [[9]], |g, v| g.clamp(v[0], -0.7, 1.1)),
        case!("abs", [[9]], |g, v| g.abs(v[0])),
        case!("square", [[9]], |g, v| g.square(v[0])),
        case!("sqrt", [[6]], |g, v| {
            let s = g.square(v[0])?;
            let s = g.add_scalar(s, 0.5)?;
            g.unary(UnaryOp::Sqrt, s)
        }),
        case!("round_sin", [[9]], |g, v| g.round(v[0], RoundMode::Sin)),
        case!("round_cubic", [[9]], |g, v| g.round(v[0], RoundMode::Cubic)),
        case!("round_identity", [[9]], |g, v| g.round(v[0], RoundMode::Identity)),
        case!("sum", [[2, 5]], |g, v| g.sum(v[0])),
        case!("mean", [[2, 5]], |g, v| g.mean(v[0])),
        case!("smooth_max", [[2, 5]], |g, v| g.reduce(Reduction::SmoothMax(4.0), v[0])),
        case!("loss_l1", [[2, 6], [2, 6]], |g, v| g.loss(LossKind::L1, v[0], v[1])),
        case!("loss_l2", [[2, 6], [2, 6]], |g, v| g.loss(LossKind::L2, v[0], v[1])),
        case!("loss_l2root", [[2, 6], [2, 6]], |g, v| g.loss(LossKind::L2Root, v[0], v[1])),
        case!("loss_smooth_linf", [[2, 6], [2, 6]], |g, v| g.loss(LossKind::SmoothLinf, v[0], v[1])),
        case!("conv2d", [[2, 3, 6, 6], [4, 3, 3, 3]], |g, v| g.conv2d(v[0], v[1], 1, 1)),
        case!("conv2d_stride2", [[1, 2, 8, 8], [3, 2, 4, 4]], |g, v| g.conv2d(v[0], v[1], 2, 1)),
        case!("conv_transpose2d", [[1, 3, 3, 3], [3, 2, 4, 4]], |g, v| g.conv_transpose2d(v[0], v[1], 2, 1)),
        case!("channel_bias", [img, [3]], |g, v| g.channel_bias(v[0], v[1])),
        case!("concat_channels", [[2, 2, 3, 3], [2, 1, 3, 3]], |g, v| g.concat_channels(v[0], v[1])),
        case!("slice_channels", [img], |g, v| g.slice_channels(v[0], 1, 2)),
        case!("avg_pool2", [img], |g, v| g.avg_pool2(v[0])),
        case!("upsample2", [[1, 2, 3, 2]], |g, v| g.upsample2(v[0])),
        case!("pad_edge", [[1, 2, 3, 5]], |g, v| g.pad_edge(v[0], 8, 8)),
        case!("crop", [[1, 2, 5, 7]], |g, v| g.crop(v[0], 3, 4)),
        case!("block_split", [[1, 2, 8, 16]], |g, v| g.block_split(v[0])),
        case!("block_merge", [[4, 8, 8]], |g, v| g.block_merge(v[0], [1, 1, 16, 16])),
        case!("dct", [[2, 8, 8]], |g, v| g.block_transform(v[0], &dct_matrix(), false)),
        case!("idct", [[2, 8, 8]], |g, v| g.block_transform(v[0], &dct_matrix(), true)),
        case!("color_transform", [img], |g, v| g.color_affine(v[0], &RGB_TO_YCBCR, &YCBCR_OFFSET)),
    ]
}

/// Checks one primitive on inputs drawn uniformly from `[-2, 2]`.
pub fn check_primitive(case: &PrimitiveCase, seed: u64) -> Result<GradCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inputs: Vec<Tensor<f64>> =
        case.shapes.iter().map(|s| Tensor::uniform(s, -2.0, 2.0, &mut rng)).collect();
    check_full(case.build, &inputs, 1e-6)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_matches() {
        let x = Tensor::new(vec![3], vec![0.5, -1.0, 2.0]).unwrap();
        let r = check_full(
            |g, v| {
                let s = g.square(v[0])?;
                g.sum(s)
            },
            &[x],
            1e-6,
        )
        .unwrap();
        assert!(r.rel_error < 1e-8, "{r:?}");
        assert!((r.analytic[2] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn relative_error_of_zero_vectors() {
        assert_eq!(relative_error(&[0.0, 0.0], &[0.0, 0.0]), 0.0);
        assert_eq!(relative_error(&[1.0], &[0.0]), 1.0);
    }
}
