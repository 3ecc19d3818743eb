use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::jpeg::{roundtrip_unit, JpegConfig};
use crate::models::ManipulationSpec;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// True-rounding compression applied before manipulation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Compression {
    None,
    Single(u8),
    /// First quality, then second (e.g. 30 then 80).
    Double(u8, u8),
}

impl fmt::Display for Compression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Compression::None => f.write_str("none"),
            Compression::Single(q) => write!(f, "{q}"),
            Compression::Double(a, b) => write!(f, "{a}+{b}"),
        }
    }
}

impl Compression {
    pub fn apply<F: Scalar>(&self, img: &Tensor<F>) -> Result<Tensor<F>> {
        match *self {
            Compression::None => Ok(img.clone()),
            Compression::Single(q) => roundtrip_unit(img, &JpegConfig::reference(q)?),
            Compression::Double(a, b) => {
                let once = roundtrip_unit(img, &JpegConfig::reference(a)?)?;
                roundtrip_unit(&once, &JpegConfig::reference(b)?)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RobustnessRow {
    pub compression: String,
    pub output_mse: f64,
    pub output_mse_std: f64,
}

/// Mean output-to-target MSE of protected images after each compression setting.
pub fn robustness_eval<F: Scalar>(
    spec: &ManipulationSpec<F>,
    protected: &[Tensor<F>],
    settings: &[Compression],
) -> Result<Vec<RobustnessRow>> {
    if protected.is_empty() {
        return Err(Error::EmptyDataset("no protected images".into()));
    }
    settings
        .iter()
        .map(|c| {
            let errs: Vec<f64> = protected
                .par_iter()
                .map(|p| spec.output_target_mse(&c.apply(p)?))
                .collect::<Result<_>>()?;
            let n = errs.len() as f64;
            let mean = errs.iter().sum::<f64>() / n;
            let var = errs.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / n;
            Ok(RobustnessRow { compression: c.to_string(), output_mse: mean, output_mse_std: var.sqrt() })
        })
        .collect()
}
