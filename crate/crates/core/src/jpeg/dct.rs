use std::f64::consts::PI;

use crate::autodiff::spatial;
use crate::error::Result;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Orthonormal 8-point DCT-II matrix, `D[u][x] = a(u) cos((2x + 1) u pi / 16)`.
pub fn dct_matrix<F: Scalar>() -> [F; 64] {
    let mut m = [F::zero(); 64];
    for u in 0..8 {
        let alpha = if u == 0 { (1.0f64 / 8.0).sqrt() } else { (2.0f64 / 8.0).sqrt() };
        for x in 0..8 {
            m[u * 8 + x] = F::lit(alpha * ((2 * x + 1) as f64 * u as f64 * PI / 16.0).cos());
        }
    }
    m
}

/// 2-D DCT of every block in a `[b, 8, 8]` tensor: `D f D^T`.
pub fn dct8x8<F: Scalar>(blocks: &Tensor<F>) -> Result<Tensor<F>> {
    spatial::block_transform(blocks, &dct_matrix(), false)
}

/// Inverse of [`dct8x8`]: `D^T C D`.
pub fn idct8x8<F: Scalar>(coeffs: &Tensor<F>) -> Result<Tensor<F>> {
    spatial::block_transform(coeffs, &dct_matrix(), true)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Literal double-sum definition.
    fn dct_direct(f: &[f64]) -> Vec<f64> {
        let alpha = |u: usize| if u == 0 { (1.0f64 / 8.0).sqrt() } else { 0.5 };
        let mut out = vec![0.0; 64];
        for u in 0..8 {
            for v in 0..8 {
                let mut acc = 0.0;
                for x in 0..8 {
                    for y in 0..8 {
                        acc += f[x * 8 + y]
                            * ((PI * (2 * x + 1) as f64 * u as f64) / 16.0).cos()
                            * ((PI * (2 * y + 1) as f64 * v as f64) / 16.0).cos();
                    }
                }
                out[u * 8 + v] = alpha(u) * alpha(v) * acc;
            }
        }
        out
    }

    #[test]
    fn matches_double_sum() {
        let f: Vec<f64> = (0..64).map(|i| ((i * 29) % 64) as f64 - 30.0).collect();
        let t = Tensor::new(vec![1, 8, 8], f.clone()).unwrap();
        let c = dct8x8(&t).unwrap();
        for (a, b) in c.data().iter().zip(dct_direct(&f)) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn constant_block_has_only_dc() {
        let v: f64 = -37.5;
        let c = dct8x8(&Tensor::full(&[1, 8, 8], v)).unwrap();
        assert!((c.data()[0] - 8.0 * v).abs() < 1e-10);
        assert!(c.data()[1..].iter().all(|x| x.abs() < 1e-10));
    }

    #[test]
    fn wrong_extent_is_rejected() {
        assert!(dct8x8(&Tensor::<f64>::zeros(&[1, 4, 4])).is_err());
    }
}
