//! Reverse-mode automatic differentiation over [`Tensor`]s.
//!
//! A [`Graph`] is a tape: every forward call evaluates eagerly, stores the
//! result as a node and, when any input requires a gradient, records the op
//! that produced it. Node ids grow monotonically so the tape is always in
//! topological order and [`Graph::backward`] is a single reverse sweep.
//!
//! Values are checked for NaN/Inf after every op; a non-finite forward result
//! is reported as [`Error::NonFinite`] rather than silently propagated.

pub mod conv;
pub mod spatial;

use std::f64::consts::PI;

use crate::error::{shape_err, Error, Result};
use crate::jpeg::RoundMode;
use crate::scalar::Scalar;
use crate::tensor::Tensor;
use conv::ConvGeom;

/// Handle to a node in a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Elementwise single-operand primitives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum UnaryOp {
    Neg,
    Scale(f64),
    AddScalar(f64),
    Sin,
    Tanh,
    LeakyRelu(f64),
    /// Gradient passes inside `[lo, hi]`, zero outside.
    Clamp(f64, f64),
    /// Subgradient 0 at the origin.
    Abs,
    Square,
    Sqrt,
    Round(RoundMode),
}

/// Elementwise two-operand primitives. One operand may be a single element.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
}

/// Scalar-valued reductions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Reduction {
    Sum,
    Mean,
    /// `(1/t) * ln(mean(exp(t * x)))`, a smooth maximum that is 0 on an all-zero input.
    SmoothMax(f64),
}

/// Loss between two equally shaped tensors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LossKind {
    /// Mean absolute difference.
    L1,
    /// Mean squared difference.
    L2,
    /// Root of the summed squares, the literal Euclidean norm. Ablation only.
    L2Root,
    /// Smooth maximum of the absolute difference (temperature [`SMOOTH_LINF_TEMPERATURE`]).
    SmoothLinf,
}

pub const SMOOTH_LINF_TEMPERATURE: f64 = 50.0;

impl std::str::FromStr for LossKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(Self::L1),
            "l2" => Ok(Self::L2),
            "l2root" | "l2-root" => Ok(Self::L2Root),
            "linf" | "smooth-linf" => Ok(Self::SmoothLinf),
            other => Err(Error::Config(format!("unknown norm `{other}` (l1, l2, l2root, linf)"))),
        }
    }
}

impl std::fmt::Display for LossKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::L1 => "l1",
            Self::L2 => "l2",
            Self::L2Root => "l2root",
            Self::SmoothLinf => "linf",
        })
    }
}

enum Op<F> {
    Unary(Var, UnaryOp),
    Binary(Var, Var, BinaryOp),
    Reduce(Var, Reduction),
    Conv2d { x: Var, w: Var, geom: ConvGeom },
    ConvTranspose2d { x: Var, w: Var, geom: ConvGeom },
    ChannelBias { x: Var, b: Var },
    Concat { a: Var, b: Var },
    SliceChannels { x: Var, start: usize },
    AvgPool2(Var),
    Upsample2(Var),
    PadEdge(Var),
    Crop(Var),
    BlockSplit(Var),
    BlockMerge(Var),
    BlockTransform { x: Var, m: Box<[F; 64]>, transpose: bool },
    ColorAffine { x: Var, a: [[F; 3]; 3] },
}

impl<F> Op<F> {
    fn inputs(&self) -> Vec<Var> {
        match self {
            Op::Unary(x, _)
            | Op::Reduce(x, _)
            | Op::SliceChannels { x, .. }
            | Op::AvgPool2(x)
            | Op::Upsample2(x)
            | Op::PadEdge(x)
            | Op::Crop(x)
            | Op::BlockSplit(x)
            | Op::BlockMerge(x)
            | Op::BlockTransform { x, .. }
            | Op::ColorAffine { x, .. } => vec![*x],
            Op::Binary(a, b, _) | Op::Concat { a, b } => vec![*a, *b],
            Op::Conv2d { x, w, .. } | Op::ConvTranspose2d { x, w, .. } => vec![*x, *w],
            Op::ChannelBias { x, b } => vec![*x, *b],
        }
    }
}

struct Node<F> {
    value: Tensor<F>,
    requires_grad: bool,
    op: Option<Op<F>>,
}

/// Gradient store returned by [`Graph::backward`], keyed by leaf [`Var`].
pub struct Gradients<F> {
    grads: Vec<Option<Tensor<F>>>,
}

impl<F: Scalar> Gradients<F> {
    pub fn get(&self, v: Var) -> Option<&Tensor<F>> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }

    pub fn take(&mut self, v: Var) -> Option<Tensor<F>> {
        self.grads.get_mut(v.0).and_then(Option::take)
    }
}

/// Recording tape for one computation.
pub struct Graph<F: Scalar> {
    nodes: Vec<Node<F>>,
    consumed: bool,
}

impl<F: Scalar> Default for Graph<F> {
    fn default() -> Self {
        Self::new()
    }
}

impl<F: Scalar> Graph<F> {
    pub fn new() -> Self {
        Self { nodes: Vec::new(), consumed: false }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Adds a leaf tensor.
    pub fn leaf(&mut self, value: Tensor<F>, requires_grad: bool) -> Var {
        self.nodes.push(Node { value, requires_grad, op: None });
        Var(self.nodes.len() - 1)
    }

    /// Leaf that receives a gradient.
    pub fn param(&mut self, value: Tensor<F>) -> Var {
        self.leaf(value, true)
    }

    /// Leaf that never receives a gradient.
    pub fn constant(&mut self, value: Tensor<F>) -> Var {
        self.leaf(value, false)
    }

    pub fn value(&self, v: Var) -> &Tensor<F> {
        &self.nodes[v.0].value
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// Number of ops recorded for differentiation.
    pub fn recorded_ops(&self) -> usize {
        self.nodes.iter().filter(|n| n.op.is_some()).count()
    }

    fn push(&mut self, value: Tensor<F>, op: Op<F>, name: &'static str) -> Result<Var> {
        value.ensure_finite(name)?;
        let requires_grad = op.inputs().iter().any(|v| self.nodes[v.0].requires_grad);
        let op = requires_grad.then_some(op);
        self.nodes.push(Node { value, requires_grad, op });
        Ok(Var(self.nodes.len() - 1))
    }

    // ---- elementwise -------------------------------------------------

    pub fn unary(&mut self, kind: UnaryOp, x: Var) -> Result<Var> {
        let xv = self.value(x);
        let out = match kind {
            UnaryOp::Neg => xv.map(|a| -a),
            UnaryOp::Scale(c) => xv.scale(F::lit(c)),
            UnaryOp::AddScalar(c) => {
                let c = F::lit(c);
                xv.map(|a| a + c)
            }
            UnaryOp::Sin => xv.map(F::sin),
            UnaryOp::Tanh => xv.map(F::tanh),
            UnaryOp::LeakyRelu(s) => {
                let s = F::lit(s);
                xv.map(|a| if a > F::zero() { a } else { a * s })
            }
            UnaryOp::Clamp(lo, hi) => {
                if lo > hi {
                    return Err(Error::InvalidArgument(format!("clamp bounds {lo} > {hi}")));
                }
                let (lo, hi) = (F::lit(lo), F::lit(hi));
                xv.map(|a| a.max(lo).min(hi))
            }
            UnaryOp::Abs => xv.map(F::abs),
            UnaryOp::Square => xv.map(|a| a * a),
            UnaryOp::Sqrt => xv.map(F::sqrt),
            UnaryOp::Round(mode) => xv.map(|a| mode.apply(a)),
        };
        self.push(out, Op::Unary(x, kind), "elementwise op")
    }

    pub fn binary(&mut self, kind: BinaryOp, a: Var, b: Var) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(b));
        let f = match kind {
            BinaryOp::Add => |x: F, y: F| x + y,
            BinaryOp::Sub => |x: F, y: F| x - y,
            BinaryOp::Mul => |x: F, y: F| x * y,
        };
        let out = if av.shape() == bv.shape() {
            av.zip_map(bv, f)?
        } else if bv.is_scalar() && (!av.is_scalar() || av.shape().len() >= bv.shape().len()) {
            let y = bv.item();
            av.map(|x| f(x, y))
        } else if av.is_scalar() {
            let x = av.item();
            bv.map(|y| f(x, y))
        } else {
            return shape_err(
                "elementwise op",
                format!("{:?} vs {:?} (only scalar broadcasting)", av.shape(), bv.shape()),
            );
        };
        self.push(out, Op::Binary(a, b, kind), "elementwise op")
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(BinaryOp::Add, a, b)
    }
    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(BinaryOp::Sub, a, b)
    }
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(BinaryOp::Mul, a, b)
    }
    pub fn scale(&mut self, x: Var, c: f64) -> Result<Var> {
        self.unary(UnaryOp::Scale(c), x)
    }
    pub fn add_scalar(&mut self, x: Var, c: f64) -> Result<Var> {
        self.unary(UnaryOp::AddScalar(c), x)
    }
    pub fn sin(&mut self, x: Var) -> Result<Var> {
        self.unary(UnaryOp::Sin, x)
    }
    pub fn tanh(&mut self, x: Var) -> Result<Var> {
        self.unary(UnaryOp::Tanh, x)
    }
    pub fn leaky_relu(&mut self, x: Var, slope: f64) -> Result<Var> {
        self.unary(UnaryOp::LeakyRelu(slope), x)
    }
    pub fn relu(&mut self, x: Var) -> Result<Var> {
        self.unary(UnaryOp::LeakyRelu(0.0), x)
    }
    pub fn clamp(&mut self, x: Var, lo: f64, hi: f64) -> Result<Var> {
        self.unary(UnaryOp::Clamp(lo, hi), x)
    }
    pub fn abs(&mut self, x: Var) -> Result<Var> {
        self.unary(UnaryOp::Abs, x)
    }
    pub fn square(&mut self, x: Var) -> Result<Var> {
        self.unary(UnaryOp::Square, x)
    }
    pub fn round(&mut self, x: Var, mode: RoundMode) -> Result<Var> {
        self.unary(UnaryOp::Round(mode), x)
    }

    // ---- reductions and losses ----------------------------------------

    pub fn reduce(&mut self, kind: Reduction, x: Var) -> Result<Var> {
        let xv = self.value(x);
        if xv.numel() == 0 {
            return shape_err("reduce", "empty tensor");
        }
        let v = match kind {
            Reduction::Sum => xv.sum(),
            Reduction::Mean => xv.mean(),
            Reduction::SmoothMax(t) => {
                let t = F::lit(t);
                let m = xv.data().iter().fold(F::neg_infinity(), |m, &a| m.max(a));
                let s: F = xv.data().iter().map(|&a| ((a - m) * t).exp()).sum();
                m + (s / F::lit(xv.numel() as f64)).ln() / t
            }
        };
        self.push(Tensor::scalar(v), Op::Reduce(x, kind), "reduction")
    }

    pub fn sum(&mut self, x: Var) -> Result<Var> {
        self.reduce(Reduction::Sum, x)
    }

    pub fn mean(&mut self, x: Var) -> Result<Var> {
        self.reduce(Reduction::Mean, x)
    }

    /// Scalar loss between `a` and `b`; zero when they are identical.
    pub fn loss(&mut self, kind: LossKind, a: Var, b: Var) -> Result<Var> {
        if self.value(a).shape() != self.value(b).shape() {
            return shape_err(
                "loss",
                format!("{:?} vs {:?}", self.value(a).shape(), self.value(b).shape()),
            );
        }
        let d = self.sub(a, b)?;
        match kind {
            LossKind::L1 => {
                let m = self.abs(d)?;
                self.mean(m)
            }
            LossKind::L2 => {
                let s = self.square(d)?;
                self.mean(s)
            }
            LossKind::L2Root => {
                let s = self.square(d)?;
                let total = self.sum(s)?;
                self.unary(UnaryOp::Sqrt, total)
            }
            LossKind::SmoothLinf => {
                let m = self.abs(d)?;
                self.reduce(Reduction::SmoothMax(SMOOTH_LINF_TEMPERATURE), m)
            }
        }
    }

    // ---- convolution ----------------------------------------------------

    pub fn conv2d(&mut self, x: Var, w: Var, stride: usize, pad: usize) -> Result<Var> {
        let (out, geom) = conv::conv2d_forward(self.value(x), self.value(w), stride, pad)?;
        self.push(out, Op::Conv2d { x, w, geom }, "conv2d")
    }

    pub fn conv_transpose2d(&mut self, x: Var, w: Var, stride: usize, pad: usize) -> Result<Var> {
        let (out, geom) = conv::conv_transpose2d_forward(self.value(x), self.value(w), stride, pad)?;
        self.push(out, Op::ConvTranspose2d { x, w, geom }, "conv_transpose2d")
    }

    /// Adds a per-channel bias `b` (shape `[c]`) to `x` (shape `[n, c, h, w]`).
    pub fn channel_bias(&mut self, x: Var, b: Var) -> Result<Var> {
        let (n, c, h, w) = self.value(x).dims4()?;
        let bv = self.value(b);
        if bv.shape() != [c] {
            return shape_err("channel_bias", format!("bias {:?} for {c} channels", bv.shape()));
        }
        let mut out = self.value(x).clone();
        let plane = h * w;
        for i in 0..n {
            for ch in 0..c {
                let bias = bv.data()[ch];
                for v in &mut out.data_mut()[(i * c + ch) * plane..(i * c + ch + 1) * plane] {
                    *v += bias;
                }
            }
        }
        self.push(out, Op::ChannelBias { x, b }, "channel_bias")
    }

    // ---- layout -----------------------------------------------------------

    pub fn concat_channels(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = spatial::concat_channels(self.value(a), self.value(b))?;
        self.push(out, Op::Concat { a, b }, "concat_channels")
    }

    pub fn slice_channels(&mut self, x: Var, start: usize, len: usize) -> Result<Var> {
        let out = spatial::slice_channels(self.value(x), start, len)?;
        self.push(out, Op::SliceChannels { x, start }, "slice_channels")
    }

    pub fn avg_pool2(&mut self, x: Var) -> Result<Var> {
        let out = spatial::avg_pool2(self.value(x))?;
        self.push(out, Op::AvgPool2(x), "avg_pool2")
    }

    pub fn upsample2(&mut self, x: Var) -> Result<Var> {
        let out = spatial::upsample2(self.value(x))?;
        self.push(out, Op::Upsample2(x), "upsample2")
    }

    pub fn pad_edge(&mut self, x: Var, h: usize, w: usize) -> Result<Var> {
        let out = spatial::pad_edge(self.value(x), h, w)?;
        self.push(out, Op::PadEdge(x), "pad_edge")
    }

    pub fn crop(&mut self, x: Var, h: usize, w: usize) -> Result<Var> {
        let out = spatial::crop(self.value(x), h, w)?;
        self.push(out, Op::Crop(x), "crop")
    }

    pub fn block_split(&mut self, x: Var) -> Result<Var> {
        let out = spatial::block_split(self.value(x))?;
        self.push(out, Op::BlockSplit(x), "block_split")
    }

    pub fn block_merge(&mut self, x: Var, dims: [usize; 4]) -> Result<Var> {
        let out = spatial::block_merge(self.value(x), dims)?;
        self.push(out, Op::BlockMerge(x), "block_merge")
    }

    /// `M X M^T` per 8x8 block, or `M^T X M` when `transpose` is set.
    pub fn block_transform(&mut self, x: Var, m: &[F; 64], transpose: bool) -> Result<Var> {
        let out = spatial::block_transform(self.value(x), m, transpose)?;
        self.push(out, Op::BlockTransform { x, m: Box::new(*m), transpose }, "block_transform")
    }

    pub fn color_affine(&mut self, x: Var, a: &[[F; 3]; 3], b: &[F; 3]) -> Result<Var> {
        let out = spatial::color_affine(self.value(x), a, b)?;
        self.push(out, Op::ColorAffine { x, a: *a }, "color_transform")
    }

    // ---- backward -----------------------------------------------------------

    /// Accumulates gradients of the scalar `root` into every reachable leaf
    /// that requires a gradient. A graph can be differentiated only once.
    pub fn backward(&mut self, root: Var) -> Result<Gradients<F>> {
        if self.consumed {
            return Err(Error::GraphConsumed);
        }
        let rv = &self.nodes[root.0].value;
        if rv.numel() != 1 {
            return Err(Error::NonScalarRoot(rv.shape().to_vec()));
        }
        if !self.nodes[root.0].requires_grad {
            return Err(Error::DetachedRoot);
        }
        self.consumed = true;

        let mut grads: Vec<Option<Tensor<F>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[root.0] = Some(Tensor::full(rv.shape(), F::one()));

        for i in (0..=root.0).rev() {
            let Some(op) = self.nodes[i].op.as_ref() else { continue };
            let Some(g) = grads[i].take() else { continue };
            for (input, contribution) in self.input_grads(op, &self.nodes[i].value, &g) {
                if !self.nodes[input.0].requires_grad {
                    continue;
                }
                match &mut grads[input.0] {
                    Some(acc) => {
                        for (a, c) in acc.data_mut().iter_mut().zip(contribution.data()) {
                            *a += *c;
                        }
                    }
                    slot @ None => *slot = Some(contribution),
                }
            }
        }
        Ok(Gradients { grads })
    }

    fn input_grads(&self, op: &Op<F>, out: &Tensor<F>, g: &Tensor<F>) -> Vec<(Var, Tensor<F>)> {
        let val = |v: &Var| &self.nodes[v.0].value;
        let need = |v: &Var| self.nodes[v.0].requires_grad;
        match op {
            Op::Unary(x, kind) => {
                let xv = val(x);
                let d = match *kind {
                    UnaryOp::Neg => g.map(|a| -a),
                    UnaryOp::Scale(c) => g.scale(F::lit(c)),
                    UnaryOp::AddScalar(_) => g.clone(),
                    UnaryOp::Sin => zip(g, xv, |gi, x| gi * x.cos()),
                    UnaryOp::Tanh => zip(g, out, |gi, y| gi * (F::one() - y * y)),
                    UnaryOp::LeakyRelu(s) => {
                        let s = F::lit(s);
                        zip(g, xv, |gi, x| if x > F::zero() { gi } else { gi * s })
                    }
                    UnaryOp::Clamp(lo, hi) => {
                        let (lo, hi) = (F::lit(lo), F::lit(hi));
                        zip(g, xv, |gi, x| if x >= lo && x <= hi { gi } else { F::zero() })
                    }
                    UnaryOp::Abs => zip(g, xv, |gi, x| {
                        if x > F::zero() {
                            gi
                        } else if x < F::zero() {
                            -gi
                        } else {
                            F::zero()
                        }
                    }),
                    UnaryOp::Square => zip(g, xv, |gi, x| gi * (x + x)),
                    UnaryOp::Sqrt => zip(g, out, |gi, y| {
                        if y > F::zero() {
                            gi / (y + y)
                        } else {
                            F::zero()
                        }
                    }),
                    UnaryOp::Round(mode) => zip(g, xv, |gi, x| gi * mode.derivative(x)),
                };
                vec![(*x, d)]
            }
            Op::Binary(a, b, kind) => {
                let (av, bv) = (val(a), val(b));
                let (ga, gb) = match kind {
                    BinaryOp::Add => (g.clone(), g.clone()),
                    BinaryOp::Sub => (g.clone(), g.map(|x| -x)),
                    BinaryOp::Mul => (broadcast_mul(g, bv), broadcast_mul(g, av)),
                };
                let mut res = Vec::with_capacity(2);
                if need(a) {
                    res.push((*a, reduce_to(ga, av.shape())));
                }
                if need(b) {
                    res.push((*b, reduce_to(gb, bv.shape())));
                }
                res
            }
            Op::Reduce(x, kind) => {
                let xv = val(x);
                let gs = g.item();
                let d = match *kind {
                    Reduction::Sum => Tensor::full(xv.shape(), gs),
                    Reduction::Mean => Tensor::full(xv.shape(), gs / F::lit(xv.numel() as f64)),
                    Reduction::SmoothMax(t) => {
                        let t = F::lit(t);
                        let m = xv.data().iter().fold(F::neg_infinity(), |m, &a| m.max(a));
                        let e = xv.map(|a| ((a - m) * t).exp());
                        let z = e.sum();
                        e.map(|v| gs * v / z)
                    }
                };
                vec![(*x, d)]
            }
            Op::Conv2d { x, w, geom } => {
                let (gx, gw) = conv::conv2d_backward(val(x), val(w), geom, g, need(x), need(w));
                collect_pair(*x, gx, *w, gw)
            }
            Op::ConvTranspose2d { x, w, geom } => {
                let (gx, gw) =
                    conv::conv_transpose2d_backward(val(x), val(w), geom, g, need(x), need(w));
                collect_pair(*x, gx, *w, gw)
            }
            Op::ChannelBias { x, b } => {
                let (n, c, h, w) = g.dims4().expect("4-d");
                let mut gb = vec![F::zero(); c];
                for i in 0..n {
                    for (ch, acc) in gb.iter_mut().enumerate() {
                        *acc += g.data()[(i * c + ch) * h * w..(i * c + ch + 1) * h * w]
                            .iter()
                            .copied()
                            .sum::<F>();
                    }
                }
                vec![(*x, g.clone()), (*b, Tensor::new(vec![c], gb).expect("bias shape"))]
            }
            Op::Concat { a, b } => {
                let ca = val(a).shape()[1];
                let cb = val(b).shape()[1];
                let ga = spatial::slice_channels(g, 0, ca).expect("concat grad");
                let gb = spatial::slice_channels(g, ca, cb).expect("concat grad");
                vec![(*a, ga), (*b, gb)]
            }
            Op::SliceChannels { x, start } => {
                vec![(*x, spatial::unslice_channels(g, val(x).shape(), *start))]
            }
            Op::AvgPool2(x) => vec![(*x, spatial::avg_pool2_adjoint(g))],
            Op::Upsample2(x) => vec![(*x, spatial::upsample2_adjoint(g))],
            Op::PadEdge(x) => {
                let s = val(x).shape();
                vec![(*x, spatial::pad_edge_adjoint(g, s[2], s[3]))]
            }
            Op::Crop(x) => {
                let s = val(x).shape();
                vec![(*x, spatial::crop_adjoint(g, s[2], s[3]))]
            }
            Op::BlockSplit(x) => {
                let s = val(x).shape();
                let dims = [s[0], s[1], s[2], s[3]];
                vec![(*x, spatial::block_merge(g, dims).expect("split grad"))]
            }
            Op::BlockMerge(x) => vec![(*x, spatial::block_split(g).expect("merge grad"))],
            Op::BlockTransform { x, m, transpose } => {
                vec![(*x, spatial::block_transform(g, m, !*transpose).expect("8x8 grad"))]
            }
            Op::ColorAffine { x, a } => vec![(*x, spatial::color_affine_adjoint(g, a))],
        }
    }
}

fn zip<F: Scalar>(g: &Tensor<F>, x: &Tensor<F>, f: impl Fn(F, F) -> F) -> Tensor<F> {
    g.zip_map(x, f).expect("gradient matches value shape")
}

fn broadcast_mul<F: Scalar>(g: &Tensor<F>, other: &Tensor<F>) -> Tensor<F> {
    if other.shape() == g.shape() {
        zip(g, other, |a, b| a * b)
    } else {
        // `other` is a single element broadcast against `g`, or `g` is.
        if other.is_scalar() {
            g.scale(other.item())
        } else {
            other.scale(g.item())
        }
    }
}

/// Sums a broadcast gradient back down to a single element when needed.
fn reduce_to<F: Scalar>(g: Tensor<F>, shape: &[usize]) -> Tensor<F> {
    if g.shape() == shape {
        g
    } else {
        Tensor::full(shape, g.sum())
    }
}

fn collect_pair<F>(x: Var, gx: Option<Tensor<F>>, w: Var, gw: Option<Tensor<F>>) -> Vec<(Var, Tensor<F>)> {
    gx.map(|t| (x, t)).into_iter().chain(gw.map(|t| (w, t))).collect()
}

/// The smooth rounding surrogate `x - sin(2 pi x) / (2 pi)` and its derivative.
pub(crate) fn sin_round<F: Scalar>(x: F) -> F {
    let tau = F::lit(2.0 * PI);
    x - (tau * x).sin() / tau
}

pub(crate) fn sin_round_derivative<F: Scalar>(x: F) -> F {
    F::one() - (F::lit(2.0 * PI) * x).cos()
}
