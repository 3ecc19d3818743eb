use crate::autodiff::{Graph, Var};
use crate::error::Result;
use crate::scalar::Scalar;

/// Full-range BT.601 (JFIF) RGB to YCbCr coefficients.
pub const RGB_TO_YCBCR: [[f64; 3]; 3] = [
    [0.299, 0.587, 0.114],
    [-0.168736, -0.331264, 0.5],
    [0.5, -0.418688, -0.081312],
];

pub const YCBCR_OFFSET: [f64; 3] = [0.0, 128.0, 128.0];

fn cast3<F: Scalar>(m: &[[f64; 3]; 3]) -> [[F; 3]; 3] {
    m.map(|row| row.map(F::lit))
}

fn invert3(m: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    let mut inv = [[0.0; 3]; 3];
    for (i, row) in inv.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            // cofactor of m[j][i]
            let (r0, r1) = ((j + 1) % 3, (j + 2) % 3);
            let (c0, c1) = ((i + 1) % 3, (i + 2) % 3);
            *v = (m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0]) / det;
        }
    }
    inv
}

/// RGB in `[0, 255]` to YCbCr. Linear, hence exactly differentiable.
pub fn rgb_to_ycbcr<F: Scalar>(g: &mut Graph<F>, rgb: Var) -> Result<Var> {
    let b = YCBCR_OFFSET.map(F::lit);
    g.color_affine(rgb, &cast3(&RGB_TO_YCBCR), &b)
}

/// Exact inverse of [`rgb_to_ycbcr`].
pub fn ycbcr_to_rgb<F: Scalar>(g: &mut Graph<F>, ycc: Var) -> Result<Var> {
    let inv = invert3(&RGB_TO_YCBCR);
    let mut off = [0.0; 3];
    for (o, row) in off.iter_mut().zip(&inv) {
        *o = -(row[0] * YCBCR_OFFSET[0] + row[1] * YCBCR_OFFSET[1] + row[2] * YCBCR_OFFSET[2]);
    }
    g.color_affine(ycc, &cast3(&inv), &off.map(F::lit))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Tensor;

    fn convert(rgb: [f64; 3]) -> Vec<f64> {
        let mut g = Graph::<f64>::new();
        let x = g.constant(Tensor::new(vec![1, 3, 1, 1], rgb.to_vec()).unwrap());
        let y = rgb_to_ycbcr(&mut g, x).unwrap();
        g.value(y).data().to_vec()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn black_and_white() {
        assert!(close(&convert([0.0, 0.0, 0.0]), &[0.0, 128.0, 128.0], 1e-9));
        assert!(close(&convert([255.0, 255.0, 255.0]), &[255.0, 128.0, 128.0], 1e-9));
    }

    #[test]
    fn pure_red() {
        // Y = 0.299*255, Cb = 128 - 0.168736*255, Cr = 128 + 0.5*255
        assert!(close(&convert([255.0, 0.0, 0.0]), &[76.245, 84.97232, 255.5], 1e-3));
    }

    #[test]
    fn wrong_channel_count() {
        let mut g = Graph::<f64>::new();
        let x = g.constant(Tensor::zeros(&[1, 4, 2, 2]));
        assert!(rgb_to_ycbcr(&mut g, x).is_err());
    }

    #[test]
    fn inverse_roundtrip() {
        let mut g = Graph::<f64>::new();
        let rgb = Tensor::from_fn(&[1, 3, 2, 2], |i| (i * 37 % 256) as f64);
        let x = g.constant(rgb.clone());
        let y = rgb_to_ycbcr(&mut g, x).unwrap();
        let back = ycbcr_to_rgb(&mut g, y).unwrap();
        assert!(close(g.value(back).data(), rgb.data(), 1e-10));
    }
}
