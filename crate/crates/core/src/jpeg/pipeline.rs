use std::str::FromStr;

use super::color::{rgb_to_ycbcr, ycbcr_to_rgb};
use super::dct::dct_matrix;
use super::quantize::{dequantize, quantize, RoundMode};
use super::tables::quality_to_tables;
use crate::autodiff::spatial::BLOCK;
use crate::autodiff::{Graph, Var};
use crate::error::{shape_err, Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Subsampling {
    S444,
    S420,
}

impl FromStr for Subsampling {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "444" | "4:4:4" => Ok(Self::S444),
            "420" | "4:2:0" => Ok(Self::S420),
            other => Err(Error::Config(format!("unknown subsampling `{other}` (444, 420)"))),
        }
    }
}

impl std::fmt::Display for Subsampling {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::S444 => "4:4:4",
            Self::S420 => "4:2:0",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct JpegConfig {
    pub quality: u8,
    pub round_mode: RoundMode,
    pub subsampling: Subsampling,
}

impl JpegConfig {
    pub fn new(quality: u8, round_mode: RoundMode, subsampling: Subsampling) -> Result<Self> {
        if !(1..=99).contains(&quality) {
            return Err(Error::Config(format!("jpeg quality {quality} outside 1..=99")));
        }
        Ok(Self { quality, round_mode, subsampling })
    }

    /// True-rounding codec at `quality` with 4:2:0 chroma.
    pub fn reference(quality: u8) -> Result<Self> {
        Self::new(quality, RoundMode::TrueRound, Subsampling::S420)
    }

    /// Sine-surrogate codec at `quality` with 4:2:0 chroma.
    pub fn surrogate(quality: u8) -> Result<Self> {
        Self::new(quality, RoundMode::Sin, Subsampling::S420)
    }
}

/// 2x2 average pooling of a chroma plane; extents must be even.
pub fn chroma_subsample<F: Scalar>(g: &mut Graph<F>, chroma: Var) -> Result<Var> {
    g.avg_pool2(chroma)
}

/// Nearest-neighbour inverse of [`chroma_subsample`].
pub fn chroma_upsample<F: Scalar>(g: &mut Graph<F>, chroma: Var) -> Result<Var> {
    g.upsample2(chroma)
}

/// Runs one set of planes through pad, blocking, DCT, quantization and back.
fn code_planes<F: Scalar>(
    g: &mut Graph<F>,
    planes: Var,
    table: &[u16; 64],
    mode: RoundMode,
) -> Result<Var> {
    let (n, c, h, w) = g.value(planes).dims4()?;
    let (ph, pw) = (h.div_ceil(BLOCK) * BLOCK, w.div_ceil(BLOCK) * BLOCK);
    let padded = if (ph, pw) != (h, w) { g.pad_edge(planes, ph, pw)? } else { planes };
    let blocks = g.block_split(padded)?;
    let centered = g.add_scalar(blocks, -128.0)?;
    let d = dct_matrix::<F>();
    let coeffs = g.block_transform(centered, &d, false)?;
    let levels = quantize(g, coeffs, table, mode)?;
    let restored = dequantize(g, levels, table)?;
    let pixels = g.block_transform(restored, &d, true)?;
    let uncentered = g.add_scalar(pixels, 128.0)?;
    let merged = g.block_merge(uncentered, [n, c, ph, pw])?;
    if (ph, pw) != (h, w) {
        g.crop(merged, h, w)
    } else {
        Ok(merged)
    }
}

/// Compresses and decompresses an RGB image in `[0, 255]` inside a graph.
pub fn jpeg_pipeline<F: Scalar>(g: &mut Graph<F>, rgb: Var, cfg: &JpegConfig) -> Result<Var> {
    let (_, c, _, _) = g.value(rgb).dims4()?;
    if c != 3 {
        return shape_err("jpeg_pipeline", format!("expected 3 channels, got {c}"));
    }
    let tables = quality_to_tables(cfg.quality)?;
    let ycc = rgb_to_ycbcr(g, rgb)?;
    let luma = g.slice_channels(ycc, 0, 1)?;
    let chroma = g.slice_channels(ycc, 1, 2)?;
    let luma = code_planes(g, luma, &tables.luma, cfg.round_mode)?;
    let chroma = match cfg.subsampling {
        Subsampling::S444 => code_planes(g, chroma, &tables.chroma, cfg.round_mode)?,
        Subsampling::S420 => {
            let small = chroma_subsample(g, chroma)?;
            let coded = code_planes(g, small, &tables.chroma, cfg.round_mode)?;
            chroma_upsample(g, coded)?
        }
    };
    let ycc = g.concat_channels(luma, chroma)?;
    let rgb = ycbcr_to_rgb(g, ycc)?;
    g.clamp(rgb, 0.0, 255.0)
}

/// Graph-free round trip of an image in `[0, 255]`.
pub fn roundtrip<F: Scalar>(rgb: &Tensor<F>, cfg: &JpegConfig) -> Result<Tensor<F>> {
    let mut g = Graph::new();
    let x = g.constant(rgb.clone());
    let y = jpeg_pipeline(&mut g, x, cfg)?;
    Ok(g.value(y).clone())
}

/// Round trip of an image in `[0, 1]`: scale to `[0, 255]`, code, scale back.
pub fn roundtrip_unit<F: Scalar>(img: &Tensor<F>, cfg: &JpegConfig) -> Result<Tensor<F>> {
    let out = roundtrip(&img.scale(F::lit(255.0)), cfg)?;
    Ok(out.scale(F::lit(1.0 / 255.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gradient_image(h: usize, w: usize) -> Tensor<f64> {
        Tensor::from_fn(&[1, 3, h, w], |i| {
            let c = i / (h * w);
            let p = i % (h * w);
            let (y, x) = (p / w, p % w);
            (40.0 + 3.0 * x as f64 + 2.0 * y as f64 + 30.0 * c as f64).min(250.0)
        })
    }

    #[test]
    fn identity_mode_444_is_lossless() {
        let img = gradient_image(16, 24);
        let cfg = JpegConfig::new(10, RoundMode::Identity, Subsampling::S444).unwrap();
        let out = roundtrip(&img, &cfg).unwrap();
        assert!(out.sub(&img).unwrap().max_abs() < 1e-6);
    }

    #[test]
    fn constant_image_survives_high_quality() {
        let img = Tensor::from_fn(&[1, 3, 16, 16], |i| [200.0, 90.0, 30.0][i / 256]);
        let out = roundtrip(&img, &JpegConfig::reference(99).unwrap()).unwrap();
        assert!(out.sub(&img).unwrap().max_abs() <= 1.0);
    }

    #[test]
    fn non_multiple_of_eight_sizes() {
        let img = gradient_image(10, 14);
        let out = roundtrip(&img, &JpegConfig::reference(75).unwrap()).unwrap();
        assert_eq!(out.shape(), img.shape());
    }

    #[test]
    fn odd_extent_with_subsampling_errors() {
        let img = gradient_image(9, 8);
        assert!(roundtrip(&img, &JpegConfig::reference(75).unwrap()).is_err());
        let cfg = JpegConfig::new(75, RoundMode::TrueRound, Subsampling::S444).unwrap();
        assert!(roundtrip(&img, &cfg).is_ok());
    }

    #[test]
    fn soft_forward_equals_true_round() {
        let img = gradient_image(16, 16).map(|v| v + (v * 0.37).sin() * 20.0);
        let t = roundtrip(&img, &JpegConfig::new(40, RoundMode::TrueRound, Subsampling::S420).unwrap()).unwrap();
        let s = roundtrip(&img, &JpegConfig::new(40, RoundMode::Soft, Subsampling::S420).unwrap()).unwrap();
        assert_eq!(t, s);
    }

    #[test]
    fn invalid_quality() {
        assert!(JpegConfig::reference(0).is_err());
        assert!(JpegConfig::reference(100).is_err());
    }
}
