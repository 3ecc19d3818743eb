//! Layout kernels: channel concat/slice, pooling, padding and 8x8 blocking.
//!
//! Every function here is linear, so each forward kernel is paired with its
//! exact adjoint.

use crate::error::{shape_err, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

pub const BLOCK: usize = 8;

pub fn concat_channels<F: Scalar>(a: &Tensor<F>, b: &Tensor<F>) -> Result<Tensor<F>> {
    let (n, ca, h, w) = a.dims4()?;
    let (nb, cb, hb, wb) = b.dims4()?;
    if (n, h, w) != (nb, hb, wb) {
        return shape_err(
            "concat_channels",
            format!("{:?} and {:?} differ outside the channel axis", a.shape(), b.shape()),
        );
    }
    let (sa, sb) = (ca * h * w, cb * h * w);
    let mut out = Vec::with_capacity(n * (sa + sb));
    for i in 0..n {
        out.extend_from_slice(&a.data()[i * sa..(i + 1) * sa]);
        out.extend_from_slice(&b.data()[i * sb..(i + 1) * sb]);
    }
    Tensor::new(vec![n, ca + cb, h, w], out)
}

pub fn slice_channels<F: Scalar>(x: &Tensor<F>, start: usize, len: usize) -> Result<Tensor<F>> {
    let (n, c, h, w) = x.dims4()?;
    if start + len > c {
        return shape_err("slice_channels", format!("channels {start}..{} of {c}", start + len));
    }
    let plane = h * w;
    let mut out = Vec::with_capacity(n * len * plane);
    for i in 0..n {
        let base = (i * c + start) * plane;
        out.extend_from_slice(&x.data()[base..base + len * plane]);
    }
    Tensor::new(vec![n, len, h, w], out)
}

/// Adjoint of [`slice_channels`]: embeds `g` into zeros of the source shape.
pub fn unslice_channels<F: Scalar>(g: &Tensor<F>, src_shape: &[usize], start: usize) -> Tensor<F> {
    let (n, c, h, w) = (src_shape[0], src_shape[1], src_shape[2], src_shape[3]);
    let len = g.shape()[1];
    let plane = h * w;
    let mut out = Tensor::zeros(src_shape);
    for i in 0..n {
        let base = (i * c + start) * plane;
        out.data_mut()[base..base + len * plane]
            .copy_from_slice(&g.data()[i * len * plane..(i + 1) * len * plane]);
    }
    out
}

pub fn avg_pool2<F: Scalar>(x: &Tensor<F>) -> Result<Tensor<F>> {
    let (n, c, h, w) = x.dims4()?;
    if h % 2 != 0 || w % 2 != 0 {
        return shape_err("avg_pool2", format!("extents {h}x{w} must be even"));
    }
    let (ho, wo) = (h / 2, w / 2);
    let quarter = F::lit(0.25);
    let d = x.data();
    let mut out = Vec::with_capacity(n * c * ho * wo);
    for p in 0..n * c {
        let src = &d[p * h * w..(p + 1) * h * w];
        for i in 0..ho {
            for j in 0..wo {
                let r0 = 2 * i * w + 2 * j;
                let r1 = r0 + w;
                out.push((src[r0] + src[r0 + 1] + src[r1] + src[r1 + 1]) * quarter);
            }
        }
    }
    Tensor::new(vec![n, c, ho, wo], out)
}

/// Nearest-neighbour 2x upsampling.
pub fn upsample2<F: Scalar>(x: &Tensor<F>) -> Result<Tensor<F>> {
    let (n, c, h, w) = x.dims4()?;
    let (ho, wo) = (2 * h, 2 * w);
    let d = x.data();
    let mut out = vec![F::zero(); n * c * ho * wo];
    for p in 0..n * c {
        let src = &d[p * h * w..(p + 1) * h * w];
        let dst = &mut out[p * ho * wo..(p + 1) * ho * wo];
        for i in 0..ho {
            for j in 0..wo {
                dst[i * wo + j] = src[(i / 2) * w + j / 2];
            }
        }
    }
    Tensor::new(vec![n, c, ho, wo], out)
}

/// Adjoint of [`avg_pool2`].
pub fn avg_pool2_adjoint<F: Scalar>(g: &Tensor<F>) -> Tensor<F> {
    upsample2(g).expect("4-d gradient").scale(F::lit(0.25))
}

/// Adjoint of [`upsample2`]: sums each 2x2 cell.
pub fn upsample2_adjoint<F: Scalar>(g: &Tensor<F>) -> Tensor<F> {
    avg_pool2(g).expect("even gradient").scale(F::lit(4.0))
}

/// Pads bottom and right edges to `th x tw` by replicating the last row/column.
pub fn pad_edge<F: Scalar>(x: &Tensor<F>, th: usize, tw: usize) -> Result<Tensor<F>> {
    let (n, c, h, w) = x.dims4()?;
    if th < h || tw < w || h == 0 || w == 0 {
        return shape_err("pad_edge", format!("cannot pad {h}x{w} to {th}x{tw}"));
    }
    let d = x.data();
    let mut out = vec![F::zero(); n * c * th * tw];
    for p in 0..n * c {
        let src = &d[p * h * w..(p + 1) * h * w];
        let dst = &mut out[p * th * tw..(p + 1) * th * tw];
        for i in 0..th {
            let si = i.min(h - 1);
            for j in 0..tw {
                dst[i * tw + j] = src[si * w + j.min(w - 1)];
            }
        }
    }
    Tensor::new(vec![n, c, th, tw], out)
}

pub fn pad_edge_adjoint<F: Scalar>(g: &Tensor<F>, h: usize, w: usize) -> Tensor<F> {
    let (n, c, th, tw) = g.dims4().expect("4-d gradient");
    let mut out = Tensor::zeros(&[n, c, h, w]);
    let d = g.data();
    for p in 0..n * c {
        let src = &d[p * th * tw..(p + 1) * th * tw];
        let dst = &mut out.data_mut()[p * h * w..(p + 1) * h * w];
        for i in 0..th {
            let si = i.min(h - 1);
            for j in 0..tw {
                dst[si * w + j.min(w - 1)] += src[i * tw + j];
            }
        }
    }
    out
}

/// Keeps the top-left `th x tw` window.
pub fn crop<F: Scalar>(x: &Tensor<F>, th: usize, tw: usize) -> Result<Tensor<F>> {
    let (n, c, h, w) = x.dims4()?;
    if th > h || tw > w {
        return shape_err("crop", format!("cannot crop {h}x{w} to {th}x{tw}"));
    }
    let d = x.data();
    let mut out = Vec::with_capacity(n * c * th * tw);
    for p in 0..n * c {
        for i in 0..th {
            let row = p * h * w + i * w;
            out.extend_from_slice(&d[row..row + tw]);
        }
    }
    Tensor::new(vec![n, c, th, tw], out)
}

pub fn crop_adjoint<F: Scalar>(g: &Tensor<F>, h: usize, w: usize) -> Tensor<F> {
    let (n, c, th, tw) = g.dims4().expect("4-d gradient");
    let mut out = Tensor::zeros(&[n, c, h, w]);
    for p in 0..n * c {
        for i in 0..th {
            let dst = p * h * w + i * w;
            let src = (p * th + i) * tw;
            out.data_mut()[dst..dst + tw].copy_from_slice(&g.data()[src..src + tw]);
        }
    }
    out
}

/// Splits `[n, c, h, w]` (extents multiples of 8) into `[n*c*(h/8)*(w/8), 8, 8]`.
pub fn block_split<F: Scalar>(x: &Tensor<F>) -> Result<Tensor<F>> {
    let (n, c, h, w) = x.dims4()?;
    if h % BLOCK != 0 || w % BLOCK != 0 {
        return shape_err("block_split", format!("extents {h}x{w} not multiples of {BLOCK}"));
    }
    let (bh, bw) = (h / BLOCK, w / BLOCK);
    let d = x.data();
    let mut out = Vec::with_capacity(x.numel());
    for p in 0..n * c {
        let plane = &d[p * h * w..(p + 1) * h * w];
        for by in 0..bh {
            for bx in 0..bw {
                for r in 0..BLOCK {
                    let row = (by * BLOCK + r) * w + bx * BLOCK;
                    out.extend_from_slice(&plane[row..row + BLOCK]);
                }
            }
        }
    }
    Tensor::new(vec![n * c * bh * bw, BLOCK, BLOCK], out)
}

/// Inverse of [`block_split`].
pub fn block_merge<F: Scalar>(blocks: &Tensor<F>, dims: [usize; 4]) -> Result<Tensor<F>> {
    let [n, c, h, w] = dims;
    let expected = [n * c * (h / BLOCK) * (w / BLOCK), BLOCK, BLOCK];
    if h % BLOCK != 0 || w % BLOCK != 0 || blocks.shape() != expected {
        return shape_err(
            "block_merge",
            format!("blocks {:?} do not tile {n}x{c}x{h}x{w}", blocks.shape()),
        );
    }
    let (bh, bw) = (h / BLOCK, w / BLOCK);
    let d = blocks.data();
    let mut out = vec![F::zero(); n * c * h * w];
    let mut k = 0;
    for p in 0..n * c {
        let plane = &mut out[p * h * w..(p + 1) * h * w];
        for by in 0..bh {
            for bx in 0..bw {
                for r in 0..BLOCK {
                    let row = (by * BLOCK + r) * w + bx * BLOCK;
                    plane[row..row + BLOCK].copy_from_slice(&d[k..k + BLOCK]);
                    k += BLOCK;
                }
            }
        }
    }
    Tensor::new(dims.to_vec(), out)
}

/// Applies `M X M^T` to every 8x8 block of a `[b, 8, 8]` tensor.
/// With `transpose` set, applies `M^T X M` instead.
pub fn block_transform<F: Scalar>(x: &Tensor<F>, m: &[F; 64], transpose: bool) -> Result<Tensor<F>> {
    let s = x.shape();
    if s.len() != 3 || s[1] != BLOCK || s[2] != BLOCK {
        return shape_err("block_transform", format!("expected [b, 8, 8], got {s:?}"));
    }
    let at = |i: usize, j: usize| if transpose { m[j * BLOCK + i] } else { m[i * BLOCK + j] };
    let mut out = vec![F::zero(); x.numel()];
    let mut tmp = [F::zero(); 64];
    for (src, dst) in x.data().chunks_exact(64).zip(out.chunks_exact_mut(64)) {
        // tmp = M X
        for i in 0..BLOCK {
            for j in 0..BLOCK {
                let mut acc = F::zero();
                for k in 0..BLOCK {
                    acc += at(i, k) * src[k * BLOCK + j];
                }
                tmp[i * BLOCK + j] = acc;
            }
        }
        // dst = tmp M^T
        for i in 0..BLOCK {
            for j in 0..BLOCK {
                let mut acc = F::zero();
                for k in 0..BLOCK {
                    acc += tmp[i * BLOCK + k] * at(j, k);
                }
                dst[i * BLOCK + j] = acc;
            }
        }
    }
    Tensor::new(s.to_vec(), out)
}

/// Per-pixel affine colour map `y = A x + b` on `[n, 3, h, w]`.
pub fn color_affine<F: Scalar>(x: &Tensor<F>, a: &[[F; 3]; 3], b: &[F; 3]) -> Result<Tensor<F>> {
    let (n, c, h, w) = x.dims4()?;
    if c != 3 {
        return shape_err("color_transform", format!("expected 3 channels, got {c}"));
    }
    let plane = h * w;
    let d = x.data();
    let mut out = vec![F::zero(); x.numel()];
    for i in 0..n {
        let base = i * 3 * plane;
        for p in 0..plane {
            let px = [d[base + p], d[base + plane + p], d[base + 2 * plane + p]];
            for ch in 0..3 {
                out[base + ch * plane + p] =
                    a[ch][0] * px[0] + a[ch][1] * px[1] + a[ch][2] * px[2] + b[ch];
            }
        }
    }
    Tensor::new(x.shape().to_vec(), out)
}

pub fn color_affine_adjoint<F: Scalar>(g: &Tensor<F>, a: &[[F; 3]; 3]) -> Tensor<F> {
    let mut at = [[F::zero(); 3]; 3];
    for (i, row) in a.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            at[j][i] = v;
        }
    }
    color_affine(g, &at, &[F::zero(); 3]).expect("3-channel gradient")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn concat_then_slice_recovers_operands() {
        let a = Tensor::<f64>::from_fn(&[2, 3, 2, 2], |i| i as f64);
        let b = Tensor::<f64>::from_fn(&[2, 1, 2, 2], |i| -(i as f64));
        let c = concat_channels(&a, &b).unwrap();
        assert_eq!(c.shape(), &[2, 4, 2, 2]);
        assert_eq!(slice_channels(&c, 0, 3).unwrap(), a);
        assert_eq!(slice_channels(&c, 3, 1).unwrap(), b);
        assert!(slice_channels(&c, 3, 2).is_err());
    }

    #[test]
    fn pool_of_known_block() {
        let x = Tensor::<f64>::new(vec![1, 1, 2, 2], vec![100.0, 102.0, 98.0, 100.0]).unwrap();
        assert_eq!(avg_pool2(&x).unwrap().data(), &[100.0]);
        let odd = Tensor::<f64>::zeros(&[1, 1, 3, 2]);
        assert!(avg_pool2(&odd).is_err());
    }

    #[test]
    fn pad_crop_roundtrip() {
        let x = Tensor::<f64>::from_fn(&[1, 2, 5, 3], |i| i as f64);
        let p = pad_edge(&x, 8, 8).unwrap();
        assert_eq!(p.shape(), &[1, 2, 8, 8]);
        // replicated corner
        assert_eq!(p.data()[7 * 8 + 7], x.data()[4 * 3 + 2]);
        assert_eq!(crop(&p, 5, 3).unwrap(), x);
    }

    #[test]
    fn split_merge_roundtrip() {
        let x = Tensor::<f32>::from_fn(&[2, 3, 16, 24], |i| (i % 251) as f32);
        let b = block_split(&x).unwrap();
        assert_eq!(b.shape(), &[2 * 3 * 2 * 3, 8, 8]);
        assert_eq!(block_merge(&b, [2, 3, 16, 24]).unwrap(), x);
    }
}
