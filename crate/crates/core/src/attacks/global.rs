//! One image-agnostic perturbation optimized over every task's dataset.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::adam::AdamState;
use super::config::AttackConfig;
use super::loss::{check_datasets, dataset_loss, draw_quality, protection_loss};
use super::runlog::{RunLog, StepRecord};
use crate::autodiff::{Graph, Var};
use crate::error::{shape_err, Result};
use crate::models::{Arch, ManipulationSpec, ModelParams};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

#[derive(Clone, Debug)]
pub struct GlobalPerturbation<F> {
    pub delta: Tensor<F>,
    pub epsilon: f64,
    pub iterations: usize,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub log: RunLog,
}

impl<F: Scalar> GlobalPerturbation<F> {
    /// `clamp(x + clamp(delta, -eps, eps), 0, 1)` inside `g`.
    pub fn apply_graph(&self, g: &mut Graph<F>, x: Var, delta: Var) -> Result<Var> {
        apply(g, x, delta, self.epsilon)
    }

    pub fn apply(&self, img: &Tensor<F>) -> Result<Tensor<F>> {
        let mut g = Graph::new();
        let x = g.constant(img.clone());
        let d = g.constant(self.delta.clone());
        let p = apply(&mut g, x, d, self.epsilon)?;
        Ok(g.value(p).clone())
    }

    /// Stores the perturbation as a single-tensor checkpoint payload.
    pub fn to_params(&self, seed: u64) -> Result<ModelParams<F>> {
        let (n, c, h, w) = self.delta.dims4()?;
        ModelParams::new(Arch::Perturbation { shape: [n, c, h, w] }, seed, vec![self.delta.clone()])
    }

    pub fn from_params(params: &ModelParams<F>, epsilon: f64) -> Result<Self> {
        let Arch::Perturbation { .. } = params.arch else {
            return shape_err("GlobalPerturbation", "checkpoint does not hold a perturbation");
        };
        Ok(Self {
            delta: params.tensors()[0].clone(),
            epsilon,
            iterations: 0,
            initial_loss: f64::NAN,
            final_loss: f64::NAN,
            log: RunLog::default(),
        })
    }
}

fn apply<F: Scalar>(g: &mut Graph<F>, x: Var, delta: Var, eps: f64) -> Result<Var> {
    let d = g.clamp(delta, -eps, eps)?;
    let s = g.add(x, d)?;
    g.clamp(s, 0.0, 1.0)
}

/// Adam over `delta`, starting from `U(-eps, eps)`, one `(task, image)` pair per
/// step, with `delta` projected back to `[-eps, eps]` after every update.
pub fn optimize_global<F: Scalar>(
    specs: &[ManipulationSpec<F>],
    datasets: &[Vec<Tensor<F>>],
    cfg: &AttackConfig,
) -> Result<GlobalPerturbation<F>> {
    cfg.validate()?;
    check_datasets(specs, datasets)?;
    let shape = datasets[0][0].shape().to_vec();
    if let Some(bad) = datasets.iter().flatten().find(|t| t.shape() != shape.as_slice()) {
        return shape_err("optimize_global", format!("image {:?} vs {:?}", bad.shape(), shape));
    }
    let eps = cfg.epsilon;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = vec![Tensor::<F>::uniform(&shape, -eps, eps, &mut rng)];
    let mut adam = AdamState::new(&params);
    let loss_of = |delta: &Tensor<F>| {
        dataset_loss(specs, datasets, cfg, |g, x| {
            let d = g.constant(delta.clone());
            apply(g, x, d, eps)
        })
    };
    let initial_loss = loss_of(&params[0])?;
    let mut log = RunLog::default();
    for step in 0..cfg.steps {
        let k = rng.random_range(0..specs.len());
        let i = rng.random_range(0..datasets[k].len());
        let q = draw_quality(cfg.jpeg, &mut rng);
        let mut g = Graph::new();
        let vars = specs[k].bind(&mut g);
        let x = g.constant(datasets[k][i].clone());
        let d = g.param(params[0].clone());
        let xp = apply(&mut g, x, d, eps)?;
        let terms = protection_loss(&mut g, &specs[k], &vars, x, xp, q, cfg.lambda_for(k), cfg)?;
        log.push(StepRecord {
            step,
            task: k,
            image: i,
            quality: q,
            recon: g.value(terms.recon).item().as_f64(),
            perturb: g.value(terms.perturb).item().as_f64(),
            total: g.value(terms.total).item().as_f64(),
        });
        let grad = g.backward(terms.total)?.take(d).expect("delta requires grad");
        adam.step(&mut params, &[grad], cfg.step_size)?;
        let bound = F::lit(eps);
        for v in params[0].data_mut() {
            *v = v.max(-bound).min(bound);
        }
    }
    let final_loss = loss_of(&params[0])?;
    Ok(GlobalPerturbation {
        delta: params.pop().expect("one parameter"),
        epsilon: eps,
        iterations: cfg.steps,
        initial_loss,
        final_loss,
        log,
    })
}
