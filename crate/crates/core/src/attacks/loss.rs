use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{AttackConfig, JpegMode};
use crate::autodiff::{Graph, LossKind, Var};
use crate::error::{Error, Result};
use crate::jpeg::jpeg_pipeline;
use crate::models::ManipulationSpec;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Graph handles of one loss evaluation.
#[derive(Clone, Copy, Debug)]
pub struct LossTerms {
    pub recon: Var,
    pub perturb: Var,
    pub total: Var,
}

/// `norm(f(codec(protected)), target) + lambda * norm(protected, original)`.
/// The codec runs on the `[0, 255]` scale when `quality` is given.
#[allow(clippy::too_many_arguments)]
pub fn protection_loss<F: Scalar>(
    g: &mut Graph<F>,
    spec: &ManipulationSpec<F>,
    spec_vars: &[Var],
    original: Var,
    protected: Var,
    quality: Option<u8>,
    lambda: f64,
    cfg: &AttackConfig,
) -> Result<LossTerms> {
    let seen = match quality {
        Some(q) => {
            let codec = cfg.codec(q)?;
            let up = g.scale(protected, 255.0)?;
            let coded = jpeg_pipeline(g, up, &codec)?;
            g.scale(coded, 1.0 / 255.0)?
        }
        None => protected,
    };
    let out = spec.forward(g, spec_vars, seen)?;
    let target = g.constant(spec.target(g.value(out).shape())?);
    let recon = g.loss(cfg.norm, out, target)?;
    let perturb = g.loss(cfg.norm, protected, original)?;
    let weighted = g.scale(perturb, lambda)?;
    let total = g.add(recon, weighted)?;
    Ok(LossTerms { recon, perturb, total })
}

pub(crate) fn check_datasets<F>(specs: &[ManipulationSpec<F>], datasets: &[Vec<Tensor<F>>]) -> Result<()> {
    if specs.is_empty() {
        return Err(Error::InvalidArgument("at least one manipulation model is required".into()));
    }
    if specs.len() != datasets.len() {
        return Err(Error::InvalidArgument(format!(
            "{} models but {} datasets",
            specs.len(),
            datasets.len()
        )));
    }
    if let Some(k) = datasets.iter().position(Vec::is_empty) {
        return Err(Error::EmptyDataset(format!("dataset for task {k} ({}) has no images", specs[k].name)));
    }
    Ok(())
}

/// Quality for one step, or `None` when compression is off.
pub(crate) fn draw_quality<R: Rng>(mode: JpegMode, rng: &mut R) -> Option<u8> {
    match mode {
        JpegMode::Off => None,
        JpegMode::Fixed(q) => Some(q),
        JpegMode::Random => Some(rng.random_range(1..=99)),
    }
}

/// Mean total loss over every `(task, image)` pair. Random-quality runs use a
/// fixed quality draw per pair so repeated evaluations are comparable.
pub fn dataset_loss<F: Scalar>(
    specs: &[ManipulationSpec<F>],
    datasets: &[Vec<Tensor<F>>],
    cfg: &AttackConfig,
    mut protect: impl FnMut(&mut Graph<F>, Var) -> Result<Var>,
) -> Result<f64> {
    check_datasets(specs, datasets)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xe7a1);
    let (mut total, mut count) = (0.0, 0usize);
    for (k, (spec, data)) in specs.iter().zip(datasets).enumerate() {
        for img in data {
            let mut g = Graph::new();
            let vars = spec.bind(&mut g);
            let x = g.constant(img.clone());
            let xp = protect(&mut g, x)?;
            let q = draw_quality(cfg.jpeg, &mut rng);
            let terms = protection_loss(&mut g, spec, &vars, x, xp, q, cfg.lambda_for(k), cfg)?;
            total += g.value(terms.total).item().as_f64();
            count += 1;
        }
    }
    Ok(total / count as f64)
}

/// Loss kind used by the sign attacks: the reconstruction term only.
pub(crate) const SIGN_ATTACK_LOSS: LossKind = LossKind::L2;
