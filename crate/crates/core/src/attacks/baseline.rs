//! Per-image iterative sign attacks.

use super::config::AttackConfig;
use super::loss::SIGN_ATTACK_LOSS;
use crate::autodiff::Graph;
use crate::error::{Error, Result};
use crate::models::ManipulationSpec;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Protected image plus the reconstruction loss before every step and after the last.
#[derive(Clone, Debug)]
pub struct AttackOutcome<F> {
    pub protected: Tensor<F>,
    pub losses: Vec<f64>,
}

#[derive(Clone, Copy)]
enum Constraint {
    /// Clamp the perturbation to `[-eps, eps]`, then the image to `[0, 1]`.
    ClampPerturbation,
    /// Euclidean projection onto the `eps`-box around the original intersected with `[0, 1]`.
    Project,
}

/// Projection of `candidate` onto `{p : |p - original| <= eps, 0 <= p <= 1}`.
pub fn project<F: Scalar>(candidate: &Tensor<F>, original: &Tensor<F>, eps: f64) -> Result<Tensor<F>> {
    let eps = F::lit(eps);
    candidate.zip_map(original, |c, x| {
        let lo = (x - eps).max(F::zero());
        let hi = (x + eps).min(F::one());
        c.max(lo).min(hi)
    })
}

fn clamp_perturbation<F: Scalar>(candidate: &Tensor<F>, original: &Tensor<F>, eps: f64) -> Result<Tensor<F>> {
    let eps = F::lit(eps);
    candidate.zip_map(original, |c, x| (x + (c - x).max(-eps).min(eps)).max(F::zero()).min(F::one()))
}

fn sign<F: Scalar>(v: F) -> F {
    if v > F::zero() {
        F::one()
    } else if v < F::zero() {
        -F::one()
    } else {
        F::zero()
    }
}

fn sign_attack<F: Scalar>(
    spec: &ManipulationSpec<F>,
    img: &Tensor<F>,
    cfg: &AttackConfig,
    constraint: Constraint,
) -> Result<AttackOutcome<F>> {
    cfg.validate()?;
    let target = spec.target(img.shape())?;
    let alpha = F::lit(cfg.step_size);
    let mut current = img.clone();
    let mut losses = Vec::with_capacity(cfg.steps + 1);
    for step in 0..cfg.steps {
        let mut g = Graph::new();
        let vars = spec.bind(&mut g);
        let x = g.param(current.clone());
        let out = spec.forward(&mut g, &vars, x)?;
        let t = g.constant(target.clone());
        let loss = g.loss(SIGN_ATTACK_LOSS, out, t)?;
        let value = g.value(loss).item().as_f64();
        if !value.is_finite() {
            return Err(Error::NonFinite(format!("attack loss at step {step}")));
        }
        losses.push(value);
        let grad = g.backward(loss)?.take(x).expect("image requires grad");
        let candidate = current.zip_map(&grad, |p, d| p - alpha * sign(d))?;
        current = match constraint {
            Constraint::ClampPerturbation => clamp_perturbation(&candidate, img, cfg.epsilon)?,
            Constraint::Project => project(&candidate, img, cfg.epsilon)?,
        };
    }
    let out = spec.eval(&current)?;
    losses.push(out.mse(&target)?);
    Ok(AttackOutcome { protected: current, losses })
}

/// Iterative fast gradient sign method towards the manipulation model's target.
pub fn ifgsm<F: Scalar>(spec: &ManipulationSpec<F>, img: &Tensor<F>, cfg: &AttackConfig) -> Result<AttackOutcome<F>> {
    sign_attack(spec, img, cfg, Constraint::ClampPerturbation)
}

/// Iterative projected gradient descent (sign steps, projection onto the feasible set).
pub fn ipgd<F: Scalar>(spec: &ManipulationSpec<F>, img: &Tensor<F>, cfg: &AttackConfig) -> Result<AttackOutcome<F>> {
    sign_attack(spec, img, cfg, Constraint::Project)
}
