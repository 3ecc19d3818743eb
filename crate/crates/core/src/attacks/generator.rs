//! Training of the conditional perturbation generator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::adam::AdamState;
use super::config::AttackConfig;
use super::global::GlobalPerturbation;
use super::loss::{check_datasets, dataset_loss, draw_quality, protection_loss};
use super::runlog::{RunLog, StepRecord};
use crate::autodiff::Graph;
use crate::error::{shape_err, Error, Result};
use crate::models::{protect_graph, Arch, Conditioning, ManipulationSpec, ModelParams};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

#[derive(Clone, Debug)]
pub struct TrainedGenerator<F> {
    pub params: ModelParams<F>,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub log: RunLog,
}

/// Adam over the generator weights. Each step draws a task, an image and,
/// for random compression, a quality in `1..=99`, then backpropagates
/// `norm(f(codec(X^p)), target) + lambda * norm(X^p, X)` into the generator.
pub fn train_generator<F: Scalar>(
    specs: &[ManipulationSpec<F>],
    datasets: &[Vec<Tensor<F>>],
    global: Option<&GlobalPerturbation<F>>,
    init: ModelParams<F>,
    cfg: &AttackConfig,
) -> Result<TrainedGenerator<F>> {
    cfg.validate()?;
    check_datasets(specs, datasets)?;
    let Arch::UNet { conditioning, .. } = init.arch else {
        return Err(Error::InvalidArgument("train_generator needs a U-Net".into()));
    };
    let global_delta = match (conditioning, global) {
        (Conditioning::ImageAndGlobal, None) => {
            return Err(Error::InvalidArgument(
                "generator is conditioned on a global perturbation but none was given".into(),
            ))
        }
        (Conditioning::ImageAndGlobal, Some(gp)) => {
            let shape = datasets[0][0].shape();
            if gp.delta.shape() != shape {
                return shape_err("train_generator", format!("global {:?} vs image {:?}", gp.delta.shape(), shape));
            }
            Some(gp.delta.clone())
        }
        (Conditioning::ImageOnly, _) => None,
    };
    let eps = cfg.epsilon;
    let mut gen = init;
    let loss_of = |gen: &ModelParams<F>| {
        dataset_loss(specs, datasets, cfg, |g, x| {
            let vars = gen.bind(g, false);
            let d = global_delta.as_ref().map(|t| g.constant(t.clone()));
            Ok(protect_graph(g, gen, &vars, x, d, eps)?.1)
        })
    };
    let initial_loss = loss_of(&gen)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut adam = AdamState::new(gen.tensors());
    let mut log = RunLog::default();
    for step in 0..cfg.steps {
        let k = rng.random_range(0..specs.len());
        let i = rng.random_range(0..datasets[k].len());
        let q = draw_quality(cfg.jpeg, &mut rng);
        let mut g = Graph::new();
        let spec_vars = specs[k].bind(&mut g);
        let gen_vars = gen.bind(&mut g, true);
        let x = g.constant(datasets[k][i].clone());
        let d = global_delta.as_ref().map(|t| g.constant(t.clone()));
        let (_, xp) = protect_graph(&mut g, &gen, &gen_vars, x, d, eps)?;
        let terms = protection_loss(&mut g, &specs[k], &spec_vars, x, xp, q, cfg.lambda_for(k), cfg)?;
        log.push(StepRecord {
            step,
            task: k,
            image: i,
            quality: q,
            recon: g.value(terms.recon).item().as_f64(),
            perturb: g.value(terms.perturb).item().as_f64(),
            total: g.value(terms.total).item().as_f64(),
        });
        let mut grads = g.backward(terms.total)?;
        let grads: Vec<Tensor<F>> = gen_vars
            .iter()
            .zip(gen.tensors())
            .map(|(v, t)| grads.take(*v).unwrap_or_else(|| Tensor::zeros(t.shape())))
            .collect();
        adam.step(gen.tensors_mut(), &grads, cfg.step_size)?;
    }
    let final_loss = loss_of(&gen)?;
    Ok(TrainedGenerator { params: gen, initial_loss, final_loss, log })
}
