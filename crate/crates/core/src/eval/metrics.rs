use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::jpeg::{roundtrip_unit, JpegConfig};
use crate::models::ManipulationSpec;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

pub fn mse<F: Scalar>(a: &Tensor<F>, b: &Tensor<F>) -> Result<f64> {
    a.mse(b)
}

/// `10 log10(max^2 / mse)` in dB; `f64::INFINITY` when the inputs are identical.
pub fn psnr<F: Scalar>(a: &Tensor<F>, b: &Tensor<F>, max_val: f64) -> Result<f64> {
    Ok(psnr_from_mse(a.mse(b)?, max_val))
}

pub(crate) fn psnr_from_mse(mse: f64, max_val: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (max_val * max_val / mse).log10()
    }
}

/// Quality numbers for one protected image. Pixel range is `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricsRecord {
    pub method: String,
    pub image: usize,
    pub perturb_mse: f64,
    pub perturb_psnr: f64,
    pub output_mse: f64,
    pub output_psnr: f64,
    /// Reference-codec quality applied before manipulation, if any.
    pub quality: Option<u8>,
    pub seed: u64,
}

/// Compresses `protected` with the true-rounding codec when `quality` is set,
/// runs the manipulation and compares with the target.
pub fn evaluate_image<F: Scalar>(
    spec: &ManipulationSpec<F>,
    original: &Tensor<F>,
    protected: &Tensor<F>,
    quality: Option<u8>,
    method: &str,
    image: usize,
    seed: u64,
) -> Result<MetricsRecord> {
    let perturb_mse = original.mse(protected)?;
    let seen = match quality {
        Some(q) => roundtrip_unit(protected, &JpegConfig::reference(q)?)?,
        None => protected.clone(),
    };
    let output_mse = spec.output_target_mse(&seen)?;
    Ok(MetricsRecord {
        method: method.to_string(),
        image,
        perturb_mse,
        perturb_psnr: psnr_from_mse(perturb_mse, 1.0),
        output_mse,
        output_psnr: psnr_from_mse(output_mse, 1.0),
        quality,
        seed,
    })
}

pub fn write_records_csv(records: &[MetricsRecord], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
