use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::metrics::psnr_from_mse;
use crate::error::{Error, Result};
use crate::models::ManipulationSpec;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// One operating point of a perturbation/effectiveness curve.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurveRow {
    /// Grid value that produced the point (lambda, epsilon, or a scale).
    pub param: f64,
    pub perturb_mse: f64,
    pub perturb_psnr: f64,
    pub output_mse: f64,
    pub output_psnr: f64,
}

fn corpus_means<F: Scalar>(
    spec: &ManipulationSpec<F>,
    originals: &[Tensor<F>],
    protected: &[Tensor<F>],
) -> Result<(f64, f64)> {
    if originals.is_empty() {
        return Err(Error::EmptyDataset("evaluation corpus is empty".into()));
    }
    if originals.len() != protected.len() {
        return Err(Error::InvalidArgument(format!(
            "{} originals vs {} protected images",
            originals.len(),
            protected.len()
        )));
    }
    let pairs: Vec<(f64, f64)> = originals
        .par_iter()
        .zip(protected)
        .map(|(x, p)| Ok((x.mse(p)?, spec.output_target_mse(p)?)))
        .collect::<Result<_>>()?;
    let n = pairs.len() as f64;
    Ok((pairs.iter().map(|p| p.0).sum::<f64>() / n, pairs.iter().map(|p| p.1).sum::<f64>() / n))
}

/// Evaluates `protect_at(value)` for each grid value; the x-axis is the mean
/// perturbation MSE, the y-axis the mean output-to-target MSE.
pub fn sweep_curve<F: Scalar>(
    spec: &ManipulationSpec<F>,
    corpus: &[Tensor<F>],
    grid: &[f64],
    mut protect_at: impl FnMut(f64) -> Result<Vec<Tensor<F>>>,
) -> Result<Vec<CurveRow>> {
    if grid.len() < 3 {
        return Err(Error::InvalidArgument(format!("a sweep needs at least 3 points, got {}", grid.len())));
    }
    if corpus.is_empty() {
        return Err(Error::EmptyDataset("evaluation corpus is empty".into()));
    }
    grid.iter()
        .map(|&param| {
            let protected = protect_at(param)?;
            let (perturb_mse, output_mse) = corpus_means(spec, corpus, &protected)?;
            Ok(CurveRow {
                param,
                perturb_mse,
                perturb_psnr: psnr_from_mse(perturb_mse, 1.0),
                output_mse,
                output_psnr: psnr_from_mse(output_mse, 1.0),
            })
        })
        .collect()
}

/// `clamp(x + s * (p - x), 0, 1)`.
pub fn scale_perturbation<F: Scalar>(original: &Tensor<F>, protected: &Tensor<F>, s: f64) -> Result<Tensor<F>> {
    let s = F::lit(s);
    original.zip_map(protected, |x, p| (x + s * (p - x)).max(F::zero()).min(F::one()))
}

/// Shrinks every perturbation by one common factor `s <= 1` so the mean
/// perturbation MSE meets `target_perturb_mse`, then evaluates the model.
/// Returns `(s, row)`; when the method already perturbs less than the
/// target, `s = 1`.
pub fn matched_output_mse<F: Scalar>(
    spec: &ManipulationSpec<F>,
    originals: &[Tensor<F>],
    protected: &[Tensor<F>],
    target_perturb_mse: f64,
) -> Result<(f64, CurveRow)> {
    let scaled = |s: f64| -> Result<Vec<Tensor<F>>> {
        originals.iter().zip(protected).map(|(x, p)| scale_perturbation(x, p, s)).collect()
    };
    let level = |s: f64| -> Result<f64> {
        let imgs = scaled(s)?;
        Ok(originals.iter().zip(&imgs).map(|(x, p)| x.mse(p)).sum::<Result<f64>>()? / originals.len() as f64)
    };
    let mut s = 1.0;
    if level(1.0)? > target_perturb_mse {
        // perturbation MSE grows monotonically with s
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..40 {
            let mid = 0.5 * (lo + hi);
            if level(mid)? > target_perturb_mse {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        s = lo;
    }
    let (perturb_mse, output_mse) = corpus_means(spec, originals, &scaled(s)?)?;
    Ok((
        s,
        CurveRow {
            param: s,
            perturb_mse,
            perturb_psnr: psnr_from_mse(perturb_mse, 1.0),
            output_mse,
            output_psnr: psnr_from_mse(output_mse, 1.0),
        },
    ))
}

pub fn write_curve_csv(rows: &[CurveRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
