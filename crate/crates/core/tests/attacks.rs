use proptest::prelude::*;
use protect_core::attacks::{
    ifgsm, ipgd, optimize_global, train_generator, AdamState, AttackConfig, JpegMode,
};
use protect_core::models::{identity_model, toy_recon_model, unet_generator, Conditioning, WHITE};
use protect_core::{LossKind, Tensor};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Pixel values on a 1/256 grid so every step below is exact in binary.
fn grid_image(seed: u64, size: usize) -> Tensor<f64> {
    let u = Tensor::<f64>::uniform(&[1, 3, size, size], 0.0, 0.9, &mut ChaCha8Rng::seed_from_u64(seed));
    u.map(|v| (v * 256.0).floor() / 256.0)
}

fn sign_config(eps: f64, alpha: f64, steps: usize) -> AttackConfig {
    AttackConfig { epsilon: eps, step_size: alpha, steps, ..AttackConfig::ifgsm() }
}

#[test]
fn sign_attacks_on_the_identity_model_follow_the_closed_form() {
    // Target white: the gradient sign is -1 on every pixel below 1, so each
    // step adds alpha until the radius (or 1) is reached.
    let spec = identity_model::<f64>(WHITE);
    let x = grid_image(1, 8);
    let alpha = 1.0 / 64.0;
    let eps = 4.0 / 64.0;
    for steps in 0..8 {
        let cfg = sign_config(eps, alpha, steps);
        let expected = x.map(|v| (v + (steps as f64 * alpha).min(eps)).min(1.0));
        assert_eq!(ifgsm(&spec, &x, &cfg).unwrap().protected, expected, "ifgsm {steps}");
        assert_eq!(ipgd(&spec, &x, &cfg).unwrap().protected, expected, "ipgd {steps}");
    }
    let out = ipgd(&spec, &x, &sign_config(eps, alpha, 5)).unwrap();
    assert_eq!(out.losses.len(), 6);
    for (k, loss) in out.losses.iter().enumerate() {
        let xk = x.map(|v| (v + (k as f64 * alpha).min(eps)).min(1.0));
        assert_eq!(*loss, xk.mse(&Tensor::ones(x.shape())).unwrap());
    }
}

#[test]
fn unbounded_radius_gives_linear_trajectory() {
    let spec = identity_model::<f64>(WHITE);
    let x = Tensor::<f64>::full(&[1, 3, 4, 4], 0.25);
    let alpha = 1.0 / 32.0;
    for steps in [1usize, 4, 16] {
        let cfg = sign_config(f64::INFINITY, alpha, steps);
        let y = ifgsm(&spec, &x, &cfg).unwrap().protected;
        let expected = (0.25 + steps as f64 * alpha).min(1.0);
        assert!(y.data().iter().all(|&v| v == expected), "{steps}");
    }
}

#[test]
fn sign_step_stops_at_the_target() {
    // A pixel already equal to the target has zero gradient and stays put.
    let spec = identity_model::<f64>([0.5, 0.5, 0.5]);
    let x = Tensor::<f64>::full(&[1, 3, 2, 2], 0.5);
    let y = ipgd(&spec, &x, &sign_config(0.1, 0.01, 10)).unwrap();
    assert_eq!(y.protected, x);
    assert!(y.losses.iter().all(|&l| l == 0.0));
}

#[test]
fn adam_minimizes_a_quadratic() {
    let target = Tensor::<f64>::new(vec![3], vec![1.0, -2.0, 0.5]).unwrap();
    let mut params = vec![Tensor::<f64>::zeros(&[3])];
    let mut adam = AdamState::new(&params);
    for _ in 0..3000 {
        let grad = params[0].zip_map(&target, |p, t| 2.0 * (p - t)).unwrap();
        adam.step(&mut params, &[grad], 0.01).unwrap();
    }
    assert!(params[0].sub(&target).unwrap().max_abs() < 1e-3);
    assert!(adam.step(&mut params, &[Tensor::zeros(&[4])], 0.01).is_err());
}

#[test]
fn training_never_touches_the_manipulation_model() {
    let spec = toy_recon_model::<f32>(7);
    let before = spec.model.fingerprint();
    let data = vec![(0..2).map(|i| grid_image(i, 16).cast()).collect::<Vec<Tensor<f32>>>()];
    let cfg = AttackConfig { steps: 5, jpeg: JpegMode::Random, ..AttackConfig::global() };
    let gp = optimize_global(&[spec.clone()], &data, &cfg).unwrap();
    let gen = unet_generator::<f32>(8, 16, 16, Conditioning::ImageAndGlobal, 0).unwrap();
    let cfg = AttackConfig { steps: 5, jpeg: JpegMode::Fixed(50), ..AttackConfig::generator() };
    train_generator(&[spec.clone()], &data, Some(&gp), gen, &cfg).unwrap();
    assert_eq!(spec.model.fingerprint(), before);
}

#[test]
fn global_perturbation_saturates_without_a_penalty() {
    // Identity model, white target, no penalty: every pixel wants to move up
    // as far as allowed, so the perturbation ends at +eps.
    let spec = identity_model::<f64>(WHITE);
    let data = vec![(0..3).map(|i| grid_image(i, 8)).collect::<Vec<_>>()];
    let eps = 0.05;
    let cfg = AttackConfig { epsilon: eps, lambda: 0.0, steps: 400, step_size: 0.01, ..AttackConfig::global() };
    let gp = optimize_global(&[spec], &data, &cfg).unwrap();
    assert!(gp.delta.data().iter().all(|&d| (d - eps).abs() < 1e-9), "{:?}", &gp.delta.data()[..4]);
    assert!(gp.final_loss < gp.initial_loss);
}

#[test]
fn heavy_penalty_drives_the_global_perturbation_to_zero() {
    let spec = identity_model::<f64>(WHITE);
    let data = vec![(0..3).map(|i| grid_image(i, 8)).collect::<Vec<_>>()];
    let cfg = AttackConfig { epsilon: 0.05, lambda: 1e4, steps: 1500, step_size: 0.01, ..AttackConfig::global() };
    let gp = optimize_global(&[spec], &data, &cfg).unwrap();
    assert!(gp.delta.max_abs() < 1e-3, "{}", gp.delta.max_abs());
}

#[test]
fn generator_training_lowers_the_loss() {
    let spec = toy_recon_model::<f32>(7);
    let data = vec![(0..4).map(|i| grid_image(i, 16).cast()).collect::<Vec<Tensor<f32>>>()];
    let gen = unet_generator::<f32>(8, 16, 16, Conditioning::ImageOnly, 3).unwrap();
    let cfg = AttackConfig { steps: 200, step_size: 1e-3, ..AttackConfig::generator() };
    let trained = train_generator(&[spec], &data, None, gen, &cfg).unwrap();
    assert!(trained.final_loss < trained.initial_loss, "{} -> {}", trained.initial_loss, trained.final_loss);
    assert_eq!(trained.log.records.len(), 200);
}

#[test]
fn every_norm_trains_without_diverging() {
    let spec = toy_recon_model::<f32>(7);
    let data = vec![(0..2).map(|i| grid_image(i, 16).cast()).collect::<Vec<Tensor<f32>>>()];
    for norm in [LossKind::L1, LossKind::L2, LossKind::L2Root, LossKind::SmoothLinf] {
        let gen = unet_generator::<f32>(8, 16, 16, Conditioning::ImageOnly, 3).unwrap();
        let cfg = AttackConfig { steps: 30, step_size: 1e-3, norm, ..AttackConfig::generator() };
        let t = train_generator(&[spec.clone()], &data, None, gen, &cfg).unwrap();
        assert!(t.final_loss.is_finite());
        assert!(t.params.tensors().iter().all(|p| p.all_finite()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn attacks_respect_radius_and_range(seed in 0u64..1000, eps in 0.001f64..0.3, alpha in 0.001f64..0.2, steps in 0usize..6) {
        let spec = toy_recon_model::<f64>(seed);
        let x = Tensor::<f64>::uniform(&[1, 3, 8, 8], 0.0, 1.0, &mut ChaCha8Rng::seed_from_u64(seed));
        let cfg = sign_config(eps, alpha, steps);
        for out in [ifgsm(&spec, &x, &cfg).unwrap(), ipgd(&spec, &x, &cfg).unwrap()] {
            for (a, b) in x.data().iter().zip(out.protected.data()) {
                prop_assert!((a - b).abs() <= eps + 1e-12);
                prop_assert!((0.0..=1.0).contains(b));
            }
        }
    }
}
