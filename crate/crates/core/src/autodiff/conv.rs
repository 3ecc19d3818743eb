//! Convolution kernels (im2col + GEMM) shared by the forward and backward passes.
//!
//! Weight layouts follow the usual convention: `conv2d` takes
//! `[out, in, k, k]`, `conv_transpose2d` takes `[in, out, k, k]`, so the same
//! weight tensor drives a convolution and its adjoint.

use crate::error::{shape_err, Result};
use crate::scalar::{gemm, Scalar};
use crate::tensor::Tensor;

/// Geometry of a square-kernel convolution from `in_h x in_w` to `out_h x out_w`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConvGeom {
    pub in_h: usize,
    pub in_w: usize,
    pub out_h: usize,
    pub out_w: usize,
    pub k: usize,
    pub stride: usize,
    pub pad: usize,
}

impl ConvGeom {
    pub fn forward(in_h: usize, in_w: usize, k: usize, stride: usize, pad: usize) -> Result<Self> {
        if stride == 0 || k == 0 {
            return shape_err("conv2d", "kernel size and stride must be positive");
        }
        let span_h = in_h + 2 * pad;
        let span_w = in_w + 2 * pad;
        if span_h < k || span_w < k {
            return shape_err(
                "conv2d",
                format!("kernel {k} larger than padded input {span_h}x{span_w}"),
            );
        }
        Ok(Self {
            in_h,
            in_w,
            out_h: (span_h - k) / stride + 1,
            out_w: (span_w - k) / stride + 1,
            k,
            stride,
            pad,
        })
    }

    /// Geometry of the convolution whose adjoint maps `h x w` up to the transposed output.
    pub fn transposed(h: usize, w: usize, k: usize, stride: usize, pad: usize) -> Result<Self> {
        if stride == 0 || k == 0 || h == 0 || w == 0 {
            return shape_err("conv_transpose2d", "empty input or zero stride/kernel");
        }
        let big_h = ((h - 1) * stride + k).checked_sub(2 * pad);
        let big_w = ((w - 1) * stride + k).checked_sub(2 * pad);
        match (big_h, big_w) {
            (Some(bh), Some(bw)) if bh > 0 && bw > 0 => {
                let g = Self::forward(bh, bw, k, stride, pad)?;
                if g.out_h != h || g.out_w != w {
                    return shape_err("conv_transpose2d", "inconsistent geometry");
                }
                Ok(g)
            }
            _ => shape_err("conv_transpose2d", format!("padding {pad} too large for input {h}x{w}")),
        }
    }

    fn patches(&self) -> usize {
        self.out_h * self.out_w
    }
}

/// Unfolds one `[c, in_h, in_w]` image into `[c*k*k, out_h*out_w]` columns.
fn im2col<F: Scalar>(x: &[F], c: usize, g: &ConvGeom, cols: &mut [F]) {
    let p = g.patches();
    let kk = g.k * g.k;
    for ch in 0..c {
        let plane = &x[ch * g.in_h * g.in_w..(ch + 1) * g.in_h * g.in_w];
        for ki in 0..g.k {
            for kj in 0..g.k {
                let row = &mut cols[(ch * kk + ki * g.k + kj) * p..][..p];
                for oh in 0..g.out_h {
                    let ih = (oh * g.stride + ki) as isize - g.pad as isize;
                    let dst = &mut row[oh * g.out_w..(oh + 1) * g.out_w];
                    if ih < 0 || ih >= g.in_h as isize {
                        dst.fill(F::zero());
                        continue;
                    }
                    let src = &plane[ih as usize * g.in_w..(ih as usize + 1) * g.in_w];
                    for (ow, d) in dst.iter_mut().enumerate() {
                        let iw = (ow * g.stride + kj) as isize - g.pad as isize;
                        *d = if iw < 0 || iw >= g.in_w as isize { F::zero() } else { src[iw as usize] };
                    }
                }
            }
        }
    }
}

/// Adjoint of [`im2col`]: accumulates columns back into an image.
fn col2im<F: Scalar>(cols: &[F], c: usize, g: &ConvGeom, x: &mut [F]) {
    let p = g.patches();
    let kk = g.k * g.k;
    for ch in 0..c {
        let plane = &mut x[ch * g.in_h * g.in_w..(ch + 1) * g.in_h * g.in_w];
        for ki in 0..g.k {
            for kj in 0..g.k {
                let row = &cols[(ch * kk + ki * g.k + kj) * p..][..p];
                for oh in 0..g.out_h {
                    let ih = (oh * g.stride + ki) as isize - g.pad as isize;
                    if ih < 0 || ih >= g.in_h as isize {
                        continue;
                    }
                    let dst = &mut plane[ih as usize * g.in_w..(ih as usize + 1) * g.in_w];
                    for (ow, &v) in row[oh * g.out_w..(oh + 1) * g.out_w].iter().enumerate() {
                        let iw = (ow * g.stride + kj) as isize - g.pad as isize;
                        if iw >= 0 && iw < g.in_w as isize {
                            dst[iw as usize] += v;
                        }
                    }
                }
            }
        }
    }
}

fn check_conv_operands<F: Scalar>(
    op: &'static str,
    x: &Tensor<F>,
    w: &Tensor<F>,
    weight_in_axis: usize,
) -> Result<(usize, usize, usize, usize, usize, usize)> {
    let (n, c, h, wd) = x.dims4()?;
    let ws = w.shape();
    if ws.len() != 4 || ws[2] != ws[3] {
        return shape_err(op, format!("weight must be [a, b, k, k], got {ws:?}"));
    }
    if ws[weight_in_axis] != c {
        return shape_err(
            op,
            format!("input has {c} channels, weight expects {}", ws[weight_in_axis]),
        );
    }
    let other = ws[1 - weight_in_axis];
    Ok((n, c, h, wd, other, ws[2]))
}

pub fn conv2d_forward<F: Scalar>(
    x: &Tensor<F>,
    w: &Tensor<F>,
    stride: usize,
    pad: usize,
) -> Result<(Tensor<F>, ConvGeom)> {
    let (n, cin, h, wd, cout, k) = check_conv_operands("conv2d", x, w, 1)?;
    let g = ConvGeom::forward(h, wd, k, stride, pad)?;
    let p = g.patches();
    let kdim = cin * k * k;
    let mut cols = vec![F::zero(); kdim * p];
    let mut out = vec![F::zero(); n * cout * p];
    for b in 0..n {
        im2col(&x.data()[b * cin * h * wd..(b + 1) * cin * h * wd], cin, &g, &mut cols);
        gemm(cout, p, kdim, w.data(), false, &cols, false, &mut out[b * cout * p..(b + 1) * cout * p], F::zero());
    }
    Ok((Tensor::new(vec![n, cout, g.out_h, g.out_w], out)?, g))
}

/// Gradients of `conv2d` with respect to input and/or weight.
pub fn conv2d_backward<F: Scalar>(
    x: &Tensor<F>,
    w: &Tensor<F>,
    g: &ConvGeom,
    grad_out: &Tensor<F>,
    need_x: bool,
    need_w: bool,
) -> (Option<Tensor<F>>, Option<Tensor<F>>) {
    let (n, cin, h, wd) = x.dims4().expect("validated in forward");
    let cout = w.shape()[0];
    let p = g.patches();
    let kdim = cin * g.k * g.k;
    let mut cols = vec![F::zero(); kdim * p];
    let mut gx = need_x.then(|| vec![F::zero(); x.numel()]);
    let mut gw = need_w.then(|| vec![F::zero(); w.numel()]);
    for b in 0..n {
        let go = &grad_out.data()[b * cout * p..(b + 1) * cout * p];
        if let Some(gw) = gw.as_mut() {
            im2col(&x.data()[b * cin * h * wd..(b + 1) * cin * h * wd], cin, g, &mut cols);
            gemm(cout, kdim, p, go, false, &cols, true, gw, F::one());
        }
        if let Some(gx) = gx.as_mut() {
            gemm(kdim, p, cout, w.data(), true, go, false, &mut cols, F::zero());
            col2im(&cols, cin, g, &mut gx[b * cin * h * wd..(b + 1) * cin * h * wd]);
        }
    }
    (
        gx.map(|d| Tensor::new(x.shape().to_vec(), d).expect("same shape")),
        gw.map(|d| Tensor::new(w.shape().to_vec(), d).expect("same shape")),
    )
}

pub fn conv_transpose2d_forward<F: Scalar>(
    x: &Tensor<F>,
    w: &Tensor<F>,
    stride: usize,
    pad: usize,
) -> Result<(Tensor<F>, ConvGeom)> {
    let (n, cin, h, wd, cout, k) = check_conv_operands("conv_transpose2d", x, w, 0)?;
    let g = ConvGeom::transposed(h, wd, k, stride, pad)?;
    let p = h * wd;
    let kdim = cout * k * k;
    let mut cols = vec![F::zero(); kdim * p];
    let big = g.in_h * g.in_w;
    let mut out = vec![F::zero(); n * cout * big];
    for b in 0..n {
        gemm(kdim, p, cin, w.data(), true, &x.data()[b * cin * p..(b + 1) * cin * p], false, &mut cols, F::zero());
        col2im(&cols, cout, &g, &mut out[b * cout * big..(b + 1) * cout * big]);
    }
    Ok((Tensor::new(vec![n, cout, g.in_h, g.in_w], out)?, g))
}

pub fn conv_transpose2d_backward<F: Scalar>(
    x: &Tensor<F>,
    w: &Tensor<F>,
    g: &ConvGeom,
    grad_out: &Tensor<F>,
    need_x: bool,
    need_w: bool,
) -> (Option<Tensor<F>>, Option<Tensor<F>>) {
    let (n, cin, h, wd) = x.dims4().expect("validated in forward");
    let cout = w.shape()[1];
    let p = h * wd;
    let kdim = cout * g.k * g.k;
    let big = g.in_h * g.in_w;
    let mut cols = vec![F::zero(); kdim * p];
    let mut gx = need_x.then(|| vec![F::zero(); x.numel()]);
    let mut gw = need_w.then(|| vec![F::zero(); w.numel()]);
    for b in 0..n {
        im2col(&grad_out.data()[b * cout * big..(b + 1) * cout * big], cout, g, &mut cols);
        if let Some(gx) = gx.as_mut() {
            gemm(cin, p, kdim, w.data(), false, &cols, false, &mut gx[b * cin * p..(b + 1) * cin * p], F::zero());
        }
        if let Some(gw) = gw.as_mut() {
            gemm(cin, kdim, p, &x.data()[b * cin * p..(b + 1) * cin * p], false, &cols, true, gw, F::one());
        }
    }
    (
        gx.map(|d| Tensor::new(x.shape().to_vec(), d).expect("same shape")),
        gw.map(|d| Tensor::new(w.shape().to_vec(), d).expect("same shape")),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(shape: &[usize], data: &[f64]) -> Tensor<f64> {
        Tensor::new(shape.to_vec(), data.to_vec()).unwrap()
    }

    #[test]
    fn two_by_two_sum_kernel() {
        let x = t(&[1, 1, 2, 2], &[1.0, 2.0, 3.0, 4.0]);
        let w = Tensor::ones(&[1, 1, 2, 2]);
        let (y, _) = conv2d_forward(&x, &w, 1, 0).unwrap();
        assert_eq!(y.shape(), &[1, 1, 1, 1]);
        assert_eq!(y.data(), &[10.0]);
    }

    #[test]
    fn output_extent_formula() {
        let x = Tensor::<f64>::zeros(&[2, 3, 9, 7]);
        let w = Tensor::zeros(&[5, 3, 4, 4]);
        let (y, _) = conv2d_forward(&x, &w, 2, 1).unwrap();
        // floor((9 + 2 - 4) / 2) + 1 = 4, floor((7 + 2 - 4) / 2) + 1 = 3
        assert_eq!(y.shape(), &[2, 5, 4, 3]);
    }

    #[test]
    fn kernel_larger_than_input_is_rejected() {
        let x = Tensor::<f64>::zeros(&[1, 1, 2, 2]);
        let w = Tensor::zeros(&[1, 1, 4, 4]);
        assert!(conv2d_forward(&x, &w, 1, 0).is_err());
    }

    #[test]
    fn channel_mismatch_is_rejected() {
        let x = Tensor::<f64>::zeros(&[1, 2, 4, 4]);
        let w = Tensor::zeros(&[1, 3, 2, 2]);
        assert!(conv2d_forward(&x, &w, 1, 0).is_err());
        assert!(conv_transpose2d_forward(&x, &w, 1, 0).is_err());
    }

    #[test]
    fn unit_kernels_are_identity() {
        let x = t(&[1, 1, 2, 3], &[1.0, -2.0, 3.0, 0.5, 7.0, -1.0]);
        let w = Tensor::ones(&[1, 1, 1, 1]);
        assert_eq!(conv2d_forward(&x, &w, 1, 0).unwrap().0, x);
        assert_eq!(conv_transpose2d_forward(&x, &w, 1, 0).unwrap().0, x);
    }

    #[test]
    fn stride_two_transpose_of_single_pixel_stamps_kernel() {
        let x = t(&[1, 1, 1, 1], &[2.5]);
        let kernel: Vec<f64> = (0..16).map(|i| i as f64 - 4.0).collect();
        let w = t(&[1, 1, 4, 4], &kernel);
        let (y, _) = conv_transpose2d_forward(&x, &w, 2, 0).unwrap();
        assert_eq!(y.shape(), &[1, 1, 4, 4]);
        let expected: Vec<f64> = kernel.iter().map(|v| v * 2.5).collect();
        assert_eq!(y.data(), expected.as_slice());
    }
}
