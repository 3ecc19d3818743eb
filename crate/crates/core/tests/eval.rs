use protect_core::attacks::AttackConfig;
use protect_core::eval::{
    distribution_report, evaluate_image, matched_output_mse, protect_corpus, psnr, robustness_eval,
    runtime_bench, scale_perturbation, sweep_curve, write_curve_csv, write_records_csv, Compression,
    Method,
};
use protect_core::io::synth_corpus;
use protect_core::models::{identity_model, toy_recon_model, WHITE};
use protect_core::Tensor;

#[test]
fn psnr_of_unit_error_at_8_bit_range() {
    let a = Tensor::<f64>::full(&[1, 3, 4, 4], 100.0);
    let b = Tensor::<f64>::full(&[1, 3, 4, 4], 101.0);
    assert!((psnr(&a, &b, 255.0).unwrap() - 48.1308).abs() < 1e-4);
    assert_eq!(psnr(&a, &a, 255.0).unwrap(), f64::INFINITY);
}

#[test]
fn distribution_of_a_constant_list() {
    let r = distribution_report("m", vec![0.25; 6]).unwrap();
    assert_eq!(r.mean, 0.25);
    assert_eq!(r.variance, 0.0);
    assert_eq!(r.max_over_mean, 1.0);
    assert!(r.summary().contains("max_over_mean = 1.000000"));
    assert!(distribution_report("m", vec![]).is_err());
    let r = distribution_report("m", vec![1.0, 3.0]).unwrap();
    assert_eq!((r.mean, r.variance, r.max), (2.0, 1.0, 3.0));
}

#[test]
fn bench_with_one_repeat_has_no_spread() {
    let b = runtime_bench("noop", 1, || Ok(())).unwrap();
    assert_eq!(b.runs, 1);
    assert_eq!(b.std_ms, 0.0);
    assert!(runtime_bench("noop", 0, || Ok(())).is_err());
}

#[test]
fn clean_images_have_no_perturbation() {
    let spec = toy_recon_model::<f32>(7);
    let corpus = synth_corpus::<f32>(3, 16, 1).unwrap();
    let protected = protect_corpus(&Method::Clean, &spec, &corpus).unwrap();
    for (i, (x, p)) in corpus.iter().zip(&protected).enumerate() {
        let r = evaluate_image(&spec, x, p, None, "clean", i, 0).unwrap();
        assert_eq!(r.perturb_mse, 0.0);
        assert_eq!(r.perturb_psnr, f64::INFINITY);
        assert!(r.output_mse > 0.0);
        let compressed = evaluate_image(&spec, x, p, Some(50), "clean", i, 0).unwrap();
        assert_eq!(compressed.quality, Some(50));
    }
}

#[test]
fn scaling_and_matching_perturbations() {
    let spec = identity_model::<f64>(WHITE);
    let x = Tensor::<f64>::full(&[1, 3, 4, 4], 0.5);
    let p = Tensor::<f64>::full(&[1, 3, 4, 4], 0.6);
    assert_eq!(scale_perturbation(&x, &p, 0.0).unwrap(), x);
    assert!(scale_perturbation(&x, &p, 1.0).unwrap().sub(&p).unwrap().max_abs() < 1e-15);
    // Perturbation MSE 0.01; halving the shift quarters it.
    let (s, row) = matched_output_mse(&spec, &[x.clone()], &[p.clone()], 0.0025).unwrap();
    assert!((s - 0.5).abs() < 1e-9);
    assert!((row.perturb_mse - 0.0025).abs() < 1e-9);
    assert!((row.output_mse - 0.2025).abs() < 1e-6);
    let (s, _) = matched_output_mse(&spec, &[x.clone()], &[p.clone()], 1.0).unwrap();
    assert_eq!(s, 1.0);
}

#[test]
fn sweep_produces_one_row_per_grid_value() {
    let spec = toy_recon_model::<f32>(7);
    let corpus = synth_corpus::<f32>(2, 16, 3).unwrap();
    let rows = sweep_curve(&spec, &corpus, &[0.01, 0.02, 0.04], |eps| {
        let cfg = AttackConfig { epsilon: eps, steps: 5, ..AttackConfig::ipgd() };
        protect_corpus(&Method::Ipgd(cfg), &spec, &corpus)
    })
    .unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows.windows(2).all(|w| w[0].perturb_mse < w[1].perturb_mse));
    assert!(sweep_curve(&spec, &corpus, &[0.1, 0.2], |_| Ok(corpus.clone())).is_err());

    let dir = tempfile::tempdir().unwrap();
    write_curve_csv(&rows, &dir.path().join("c.csv")).unwrap();
    let text = std::fs::read_to_string(dir.path().join("c.csv")).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.starts_with("param,perturb_mse"));
}

#[test]
fn robustness_rows_follow_the_settings() {
    let spec = toy_recon_model::<f32>(7);
    let corpus = synth_corpus::<f32>(2, 16, 3).unwrap();
    let settings = [Compression::None, Compression::Single(80), Compression::Double(30, 80)];
    let rows = robustness_eval(&spec, &corpus, &settings).unwrap();
    let names: Vec<_> = rows.iter().map(|r| r.compression.as_str()).collect();
    assert_eq!(names, ["none", "80", "30+80"]);
    let direct: f64 = corpus.iter().map(|x| spec.output_target_mse(x).unwrap()).sum::<f64>() / 2.0;
    assert!((rows[0].output_mse - direct).abs() < 1e-12);
    assert!(robustness_eval(&spec, &[], &settings).is_err());
}

#[test]
fn records_csv_has_a_header_and_one_line_per_image() {
    let spec = toy_recon_model::<f32>(7);
    let corpus = synth_corpus::<f32>(2, 16, 3).unwrap();
    let recs: Vec<_> = corpus
        .iter()
        .enumerate()
        .map(|(i, x)| evaluate_image(&spec, x, x, None, "clean", i, 1).unwrap())
        .collect();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.csv");
    write_records_csv(&recs, &path).unwrap();
    assert_eq!(std::fs::read_to_string(path).unwrap().lines().count(), 3);
}
