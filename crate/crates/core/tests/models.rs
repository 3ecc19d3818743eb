use proptest::prelude::*;
use protect_core::models::{
    apply_protection, companion_image, depth_for, load_checkpoint, save_checkpoint, toy_blend_model,
    toy_recon_model, unet_generator, Arch, Conditioning, ModelParams, BLUE, WHITE,
};
use protect_core::{Error, Graph, Tensor};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn image(seed: u64, size: usize) -> Tensor<f64> {
    Tensor::uniform(&[1, 3, size, size], 0.0, 1.0, &mut ChaCha8Rng::seed_from_u64(seed))
}

#[test]
fn toy_models_map_images_to_images() {
    let x = image(1, 32);
    let recon = toy_recon_model::<f64>(3);
    let y = recon.eval(&x).unwrap();
    assert_eq!(y.shape(), x.shape());
    assert!(y.data().iter().all(|v| (0.0..=1.0).contains(v)));
    assert_eq!(y, toy_recon_model::<f64>(3).eval(&x).unwrap());
    assert_ne!(y, toy_recon_model::<f64>(4).eval(&x).unwrap());
    assert_eq!(recon.target_color, WHITE);
    assert_eq!(toy_blend_model::<f64>(3).target_color, BLUE);
    // The output depends on the input, otherwise there is nothing to attack.
    assert!(y.mse(&recon.eval(&image(2, 32)).unwrap()).unwrap() > 1e-4);
}

#[test]
fn blend_model_is_not_symmetric_in_its_inputs() {
    let spec = toy_blend_model::<f64>(5);
    let x = image(1, 16);
    let c = companion_image::<f64>(x.shape(), 99).unwrap();
    let run = |a: &Tensor<f64>, b: &Tensor<f64>| {
        let mut g = Graph::new();
        let vars = spec.model.bind(&mut g, false);
        let (a, b) = (g.constant(a.clone()), g.constant(b.clone()));
        let ab = g.concat_channels(a, b).unwrap();
        let y = spec.model.forward(&mut g, &vars, ab).unwrap();
        g.value(y).clone()
    };
    assert!(run(&x, &c).mse(&run(&c, &x)).unwrap() > 1e-6);
    assert_eq!(spec.eval(&x).unwrap().shape(), x.shape());
}

#[test]
fn companion_image_is_smooth_and_in_range() {
    let c = companion_image::<f64>(&[1, 3, 32, 32], 4).unwrap();
    assert!(c.data().iter().all(|v| (0.1..=0.9).contains(v)));
    assert_eq!(c, companion_image::<f64>(&[1, 3, 32, 32], 4).unwrap());
}

#[test]
fn generator_depth_and_size() {
    assert_eq!(depth_for(256, 256), 6);
    assert_eq!(depth_for(64, 64), 4);
    assert_eq!(depth_for(8, 8), 1);
    assert_eq!(depth_for(4096, 4096), 6);
    // Full-scale generator: about 29.2 million parameters.
    let arch = Arch::UNet { base_width: 64, depth: 6, conditioning: Conditioning::ImageAndGlobal };
    let count: usize = arch.param_shapes().iter().map(|(_, s)| s.iter().product::<usize>()).sum();
    let reference = 29_240_000.0;
    assert!((count as f64 - reference).abs() / reference < 0.05, "{count}");
    assert!(unet_generator::<f32>(12, 64, 64, Conditioning::ImageOnly, 0).is_err());
}

#[test]
fn generator_output_shape_and_determinism() {
    let gen = unet_generator::<f64>(8, 32, 32, Conditioning::ImageAndGlobal, 1).unwrap();
    let x = image(3, 32);
    let d = Tensor::full(x.shape(), 0.01);
    let (delta, xp) = apply_protection(&gen, &x, Some(&d), 0.05).unwrap();
    assert_eq!(delta.shape(), x.shape());
    assert_eq!(xp.shape(), x.shape());
    let again = unet_generator::<f64>(8, 32, 32, Conditioning::ImageAndGlobal, 1).unwrap();
    assert_eq!(gen.fingerprint(), again.fingerprint());
    assert_eq!(apply_protection(&again, &x, Some(&d), 0.05).unwrap().1, xp);
    assert!(apply_protection(&gen, &x, None, 0.05).is_err());
    let small = Tensor::full(&[1, 3, 16, 16], 0.0);
    assert!(apply_protection(&gen, &x, Some(&small), 0.05).is_err());
}

#[test]
fn zero_generator_leaves_the_image_unchanged() {
    let mut gen = unet_generator::<f64>(8, 16, 16, Conditioning::ImageOnly, 2).unwrap();
    for t in gen.tensors_mut() {
        t.data_mut().iter_mut().for_each(|v| *v = 0.0);
    }
    let x = image(4, 16);
    let (delta, xp) = apply_protection(&gen, &x, None, 0.05).unwrap();
    assert_eq!(delta.max_abs(), 0.0);
    assert_eq!(xp, x);
}

#[test]
fn checkpoint_roundtrip_and_validation() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.ckpt");
    let gen = unet_generator::<f32>(8, 16, 16, Conditioning::ImageAndGlobal, 5).unwrap();
    save_checkpoint(&gen, &path).unwrap();
    let back: ModelParams<f32> = load_checkpoint(&path).unwrap();
    assert_eq!(back.fingerprint(), gen.fingerprint());
    assert_eq!(back.arch, gen.arch);
    let wide: ModelParams<f64> = load_checkpoint(&path).unwrap();
    assert_eq!(wide.cast::<f32>().fingerprint(), gen.fingerprint());

    // A flipped byte in the blob is caught by the checksum.
    let bin = dir.path().join("g.bin");
    let mut bytes = std::fs::read(&bin).unwrap();
    bytes[10] ^= 1;
    std::fs::write(&bin, &bytes).unwrap();
    assert!(matches!(load_checkpoint::<f32>(&path), Err(Error::Format { .. })));
    bytes.pop();
    std::fs::write(&bin, &bytes).unwrap();
    assert!(matches!(load_checkpoint::<f32>(&path), Err(Error::Format { .. })));

    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::write(&path, text.replace("format = 1", "format = 9")).unwrap();
    assert!(matches!(load_checkpoint::<f32>(&path), Err(Error::Format { .. })));
    assert!(load_checkpoint::<f32>(&dir.path().join("missing.ckpt")).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn protection_stays_in_the_epsilon_ball(seed in 0u64..500, eps in 0.0f64..0.2, scale in 0.0f64..50.0) {
        let mut gen = unet_generator::<f64>(8, 16, 16, Conditioning::ImageOnly, seed).unwrap();
        // Large weights push the raw output far outside the ball.
        for t in gen.tensors_mut() {
            t.data_mut().iter_mut().for_each(|v| *v *= scale);
        }
        let x = image(seed, 16);
        let (_, xp) = apply_protection(&gen, &x, None, eps).unwrap();
        for (a, b) in x.data().iter().zip(xp.data()) {
            prop_assert!((a - b).abs() <= eps + 1e-12);
            prop_assert!((0.0..=1.0).contains(b));
        }
    }
}
