//! Procedural images standing in for a photo dataset: smooth colour
//! gradients, a soft-edged ellipse near the centre and mild noise.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::ppm::save_image;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

const NOISE_STD: f64 = 0.02;

/// Image `index` of the corpus with `seed`, shape `[1, 3, size, size]`,
/// values on the 1/255 grid.
pub fn synth_image<F: Scalar>(size: usize, seed: u64, index: usize) -> Result<Tensor<F>> {
    if size == 0 || size % 16 != 0 {
        return Err(Error::InvalidArgument(format!("image size {size} must be a positive multiple of 16")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ index as u64);
    let s = size as f64;
    let mut channel_params = Vec::with_capacity(3);
    for _ in 0..3 {
        channel_params.push([
            rng.random_range(0.2..0.6),   // base level
            rng.random_range(-0.3..0.3),  // horizontal slope
            rng.random_range(-0.3..0.3),  // vertical slope
            rng.random_range(0.0..0.15),  // wave amplitude
            rng.random_range(0.5..2.5),   // wave frequency
            rng.random_range(0.0..6.28),  // wave phase
            rng.random_range(0.15..0.85), // ellipse colour
        ]);
    }
    let cx = s * rng.random_range(0.4..0.6);
    let cy = s * rng.random_range(0.4..0.6);
    let rx = s * rng.random_range(0.18..0.32);
    let ry = s * rng.random_range(0.22..0.38);
    let noise = Normal::new(0.0, NOISE_STD).expect("valid std");
    let mut data = vec![F::zero(); 3 * size * size];
    for (c, p) in channel_params.iter().enumerate() {
        for y in 0..size {
            for x in 0..size {
                let (u, v) = (x as f64 / s, y as f64 / s);
                let bg = p[0] + p[1] * (u - 0.5) + p[2] * (v - 0.5)
                    + p[3] * (2.0 * std::f64::consts::PI * (p[4] * u + 0.7 * p[4] * v) + p[5]).sin();
                let r = ((x as f64 - cx) / rx).powi(2) + ((y as f64 - cy) / ry).powi(2);
                let inside = 1.0 / (1.0 + ((r - 1.0) * 12.0).exp());
                let val = bg * (1.0 - inside) + p[6] * inside + noise.sample(&mut rng);
                data[(c * size + y) * size + x] = F::lit((val.clamp(0.0, 1.0) * 255.0).round() / 255.0);
            }
        }
    }
    Tensor::new(vec![1, 3, size, size], data)
}

pub fn synth_corpus<F: Scalar>(n: usize, size: usize, seed: u64) -> Result<Vec<Tensor<F>>> {
    (0..n).map(|i| synth_image(size, seed, i)).collect()
}

/// Writes `img_000.ppm`, `img_001.ppm`, ... into `out_dir`.
pub fn write_corpus(n: usize, size: usize, seed: u64, out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir)?;
    (0..n)
        .map(|i| {
            let path = out_dir.join(format!("img_{i:03}.ppm"));
            save_image(&synth_image::<f64>(size, seed, i)?, &path)?;
            Ok(path)
        })
        .collect()
}
