//! Command implementations, generic over the arithmetic precision.

use std::fs;
use std::path::{Path, PathBuf};

use protect_core::attacks::{
    ifgsm, ipgd, optimize_global, train_generator, AttackConfig, GlobalPerturbation,
};
use protect_core::eval::{
    distribution_report, evaluate_image, protect_corpus, robustness_eval, runtime_bench,
    sweep_curve, write_curve_csv, write_records_csv, Compression, Method, MetricsRecord,
};
use protect_core::io::{load_image, save_image, write_corpus};
use protect_core::jpeg::{roundtrip, JpegConfig};
use protect_core::models::{
    apply_protection, load_checkpoint, save_checkpoint, toy_blend_model, toy_recon_model,
    unet_generator, Conditioning, ManipulationSpec, ModelParams,
};
use protect_core::{Error, Result, Scalar, Tensor};

use crate::args::{AttackKind, CommonArgs, ProtectMethod, SweepMethod};
use crate::manifest::Manifest;
use crate::settings::{Settings, Task};

pub fn corpus_paths(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir)
        .map_err(|e| Error::Config(format!("cannot read corpus directory {}: {e}", dir.display())))?;
    let mut paths: Vec<PathBuf> = entries
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    paths.retain(|p| p.extension().is_some_and(|e| e == "ppm"));
    paths.sort();
    if paths.is_empty() {
        return Err(Error::EmptyDataset(format!("no .ppm files in {}", dir.display())));
    }
    Ok(paths)
}

fn load_corpus<F: Scalar>(paths: &[PathBuf]) -> Result<Vec<Tensor<F>>> {
    paths.iter().map(|p| load_image(p)).collect()
}

fn specs<F: Scalar>(s: &Settings) -> Vec<ManipulationSpec<F>> {
    s.tasks
        .iter()
        .map(|t| match t {
            Task::Recon => toy_recon_model(s.model_seed),
            Task::Blend => toy_blend_model(s.model_seed + 1),
        })
        .collect()
}

/// Round-robin split: image `i` belongs to task `i % k`.
fn split<F: Scalar>(corpus: &[Tensor<F>], k: usize) -> Vec<Vec<Tensor<F>>> {
    (0..k).map(|t| corpus.iter().skip(t).step_by(k).cloned().collect()).collect()
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text)?;
    Ok(())
}

pub fn synth(n: usize, size: usize, seed: u64, out: &Path, mut manifest: Manifest) -> Result<()> {
    let paths = write_corpus(n, size, seed, out)?;
    for p in &paths {
        manifest.output(&p.file_name().unwrap().to_string_lossy());
    }
    manifest.write(out)?;
    println!("wrote {} images to {}", paths.len(), out.display());
    Ok(())
}

pub fn optimize_global_cmd<F: Scalar>(s: &Settings, common: &CommonArgs, mut manifest: Manifest) -> Result<()> {
    let paths = corpus_paths(&common.corpus)?;
    manifest.inputs(&paths);
    let corpus = load_corpus::<F>(&paths)?;
    let specs = specs::<F>(s);
    let gp = optimize_global(&specs, &split(&corpus, specs.len()), &s.attack)?;
    fs::create_dir_all(&common.out)?;
    save_checkpoint(&gp.to_params(s.attack.seed)?, &common.out.join("global.ckpt"))?;
    gp.log.write_jsonl(&common.out.join("runlog.jsonl"))?;
    write_text(
        &common.out.join("summary.txt"),
        &format!(
            "iterations = {}\nepsilon = {}\ninitial_loss = {:.8e}\nfinal_loss = {:.8e}\n",
            gp.iterations, gp.epsilon, gp.initial_loss, gp.final_loss
        ),
    )?;
    for o in ["global.ckpt", "global.bin", "runlog.jsonl", "summary.txt"] {
        manifest.output(o);
    }
    manifest.write(&common.out)?;
    println!("global perturbation: loss {:.6} -> {:.6}", gp.initial_loss, gp.final_loss);
    Ok(())
}

fn load_global<F: Scalar>(path: &Path, eps: f64) -> Result<GlobalPerturbation<F>> {
    GlobalPerturbation::from_params(&load_checkpoint(path)?, eps)
}

pub fn train_generator_cmd<F: Scalar>(
    s: &Settings,
    common: &CommonArgs,
    global: Option<&Path>,
    image_only: bool,
    mut manifest: Manifest,
) -> Result<()> {
    let paths = corpus_paths(&common.corpus)?;
    manifest.inputs(&paths);
    let corpus = load_corpus::<F>(&paths)?;
    let (_, _, h, w) = corpus[0].dims4()?;
    let gp = match global {
        Some(p) => {
            manifest.input(p);
            manifest.input(&p.with_extension("bin"));
            Some(load_global::<F>(p, s.attack.epsilon)?)
        }
        None => None,
    };
    if gp.is_none() && !image_only {
        return Err(Error::Config("--global is required unless --image-only is given".into()));
    }
    let conditioning = if image_only { Conditioning::ImageOnly } else { Conditioning::ImageAndGlobal };
    let init = unet_generator::<F>(s.base_width, h, w, conditioning, s.attack.seed)?;
    let specs = specs::<F>(s);
    let trained = train_generator(&specs, &split(&corpus, specs.len()), gp.as_ref(), init, &s.attack)?;
    fs::create_dir_all(&common.out)?;
    save_checkpoint(&trained.params, &common.out.join("generator.ckpt"))?;
    trained.log.write_jsonl(&common.out.join("runlog.jsonl"))?;
    write_text(
        &common.out.join("summary.txt"),
        &format!(
            "parameters = {}\ninitial_loss = {:.8e}\nfinal_loss = {:.8e}\n",
            trained.params.parameter_count(),
            trained.initial_loss,
            trained.final_loss
        ),
    )?;
    for o in ["generator.ckpt", "generator.bin", "runlog.jsonl", "summary.txt"] {
        manifest.output(o);
    }
    manifest.write(&common.out)?;
    println!("generator: loss {:.6} -> {:.6}", trained.initial_loss, trained.final_loss);
    Ok(())
}

fn save_protected<F: Scalar>(
    spec: &ManipulationSpec<F>,
    s: &Settings,
    paths: &[PathBuf],
    originals: &[Tensor<F>],
    protected: &[Tensor<F>],
    method: &str,
    out: &Path,
    manifest: &mut Manifest,
) -> Result<Vec<MetricsRecord>> {
    fs::create_dir_all(out)?;
    let mut records = Vec::with_capacity(paths.len());
    for (i, ((p, x), xp)) in paths.iter().zip(originals).zip(protected).enumerate() {
        let name = p.file_name().unwrap().to_string_lossy().to_string();
        save_image(xp, &out.join(&name))?;
        manifest.output(&name);
        records.push(evaluate_image(spec, x, xp, None, method, i, s.attack.seed)?);
    }
    write_records_csv(&records, &out.join("metrics.csv"))?;
    manifest.output("metrics.csv");
    Ok(records)
}

fn report(records: &[MetricsRecord]) {
    let n = records.len() as f64;
    let p: f64 = records.iter().map(|r| r.perturb_mse).sum::<f64>() / n;
    let o: f64 = records.iter().map(|r| r.output_mse).sum::<f64>() / n;
    println!("images = {}\nmean_perturb_mse = {p:.6e}\nmean_output_mse = {o:.6e}", records.len());
}

pub fn attack_cmd<F: Scalar>(s: &Settings, kind: AttackKind, common: &CommonArgs, mut manifest: Manifest) -> Result<()> {
    let paths = corpus_paths(&common.corpus)?;
    manifest.inputs(&paths);
    let corpus = load_corpus::<F>(&paths)?;
    let spec = specs::<F>(s).remove(0);
    let method = match kind {
        AttackKind::Ifgsm => Method::Ifgsm(s.attack.clone()),
        AttackKind::Ipgd => Method::Ipgd(s.attack.clone()),
    };
    let protected = protect_corpus(&method, &spec, &corpus)?;
    let records = save_protected(&spec, s, &paths, &corpus, &protected, method.id(), &common.out, &mut manifest)?;
    manifest.write(&common.out)?;
    report(&records);
    Ok(())
}

pub fn protect_cmd<F: Scalar>(
    s: &Settings,
    common: &CommonArgs,
    generator: &Path,
    global: Option<&Path>,
    mut manifest: Manifest,
) -> Result<()> {
    let paths = corpus_paths(&common.corpus)?;
    manifest.inputs(&paths);
    manifest.input(generator);
    let corpus = load_corpus::<F>(&paths)?;
    let params: ModelParams<F> = load_checkpoint(generator)?;
    let gp = global.map(|p| load_global::<F>(p, s.attack.epsilon)).transpose()?;
    if let Some(p) = global {
        manifest.input(p);
    }
    let spec = specs::<F>(s).remove(0);
    let method = Method::Generator { params: &params, global: gp.as_ref(), epsilon: s.attack.epsilon };
    let protected = protect_corpus(&method, &spec, &corpus)?;
    let records = save_protected(&spec, s, &paths, &corpus, &protected, method.id(), &common.out, &mut manifest)?;
    manifest.write(&common.out)?;
    report(&records);
    Ok(())
}

fn parse_grid(grid: &str) -> Result<Vec<f64>> {
    grid.split(',')
        .map(|v| v.trim().parse().map_err(|_| Error::Config(format!("bad grid value `{v}`"))))
        .collect()
}

#[allow(clippy::too_many_arguments)]
pub fn sweep_cmd<F: Scalar>(
    s: &Settings,
    method: SweepMethod,
    common: &CommonArgs,
    grid: &str,
    eval_corpus: Option<&Path>,
    global_steps: Option<usize>,
    mut manifest: Manifest,
) -> Result<()> {
    let grid = parse_grid(grid)?;
    let paths = corpus_paths(&common.corpus)?;
    manifest.inputs(&paths);
    let train = load_corpus::<F>(&paths)?;
    let eval = match eval_corpus {
        Some(dir) => {
            let p = corpus_paths(dir)?;
            manifest.inputs(&p);
            load_corpus::<F>(&p)?
        }
        None => train.clone(),
    };
    let specs = specs::<F>(s);
    let spec = &specs[0];
    let datasets = split(&train, specs.len());
    let (_, _, h, w) = train[0].dims4()?;
    let rows = match method {
        SweepMethod::Ifgsm | SweepMethod::Ipgd => sweep_curve(spec, &eval, &grid, |eps| {
            let cfg = AttackConfig { epsilon: eps, step_size: eps / 10.0, ..s.attack.clone() };
            let m = if method == SweepMethod::Ifgsm { Method::Ifgsm(cfg) } else { Method::Ipgd(cfg) };
            protect_corpus(&m, spec, &eval)
        })?,
        SweepMethod::Global => sweep_curve(spec, &eval, &grid, |lambda| {
            let cfg = AttackConfig { lambda, ..s.attack.clone() };
            let gp = optimize_global(&specs, &datasets, &cfg)?;
            protect_corpus(&Method::Global(&gp), spec, &eval)
        })?,
        SweepMethod::Generator => {
            let gcfg = AttackConfig {
                steps: global_steps.unwrap_or(AttackConfig::global().steps),
                step_size: AttackConfig::global().step_size,
                ..s.attack.clone()
            };
            let gp = optimize_global(&specs, &datasets, &gcfg)?;
            sweep_curve(spec, &eval, &grid, |lambda| {
                let cfg = AttackConfig { lambda, ..s.attack.clone() };
                let init = unet_generator::<F>(s.base_width, h, w, Conditioning::ImageAndGlobal, cfg.seed)?;
                let trained = train_generator(&specs, &datasets, Some(&gp), init, &cfg)?;
                let m = Method::Generator { params: &trained.params, global: Some(&gp), epsilon: cfg.epsilon };
                protect_corpus(&m, spec, &eval)
            })?
        }
    };
    fs::create_dir_all(&common.out)?;
    write_curve_csv(&rows, &common.out.join("curve.csv"))?;
    manifest.output("curve.csv");
    manifest.write(&common.out)?;
    println!("param,perturb_mse,output_mse");
    for r in &rows {
        println!("{},{:.6e},{:.6e}", r.param, r.perturb_mse, r.output_mse);
    }
    Ok(())
}

/// Protected corpus for a method given on the command line.
fn protect_with<F: Scalar>(
    s: &Settings,
    method: ProtectMethod,
    generator: Option<&Path>,
    global: Option<&Path>,
    spec: &ManipulationSpec<F>,
    corpus: &[Tensor<F>],
    manifest: &mut Manifest,
) -> Result<Vec<Tensor<F>>> {
    for p in generator.iter().chain(global.iter()) {
        manifest.input(p);
    }
    let gp = global.map(|p| load_global::<F>(p, s.attack.epsilon)).transpose()?;
    match method {
        ProtectMethod::Clean => protect_corpus(&Method::Clean, spec, corpus),
        ProtectMethod::Ifgsm => protect_corpus(&Method::Ifgsm(s.attack.clone()), spec, corpus),
        ProtectMethod::Ipgd => protect_corpus(&Method::Ipgd(s.attack.clone()), spec, corpus),
        ProtectMethod::Global => {
            let gp = gp.ok_or_else(|| Error::Config("--global is required for the global method".into()))?;
            protect_corpus(&Method::Global(&gp), spec, corpus)
        }
        ProtectMethod::Generator => {
            let path = generator.ok_or_else(|| Error::Config("--generator is required".into()))?;
            let params: ModelParams<F> = load_checkpoint(path)?;
            let m = Method::Generator { params: &params, global: gp.as_ref(), epsilon: s.attack.epsilon };
            protect_corpus(&m, spec, corpus)
        }
    }
}

fn method_name(m: ProtectMethod) -> &'static str {
    match m {
        ProtectMethod::Clean => "clean",
        ProtectMethod::Ifgsm => "ifgsm",
        ProtectMethod::Ipgd => "ipgd",
        ProtectMethod::Global => "global",
        ProtectMethod::Generator => "generator",
    }
}

#[allow(clippy::too_many_arguments)]
pub fn distribution_cmd<F: Scalar>(
    s: &Settings,
    method: ProtectMethod,
    generator: Option<&Path>,
    global: Option<&Path>,
    common: &CommonArgs,
    mut manifest: Manifest,
) -> Result<()> {
    let paths = corpus_paths(&common.corpus)?;
    manifest.inputs(&paths);
    let corpus = load_corpus::<F>(&paths)?;
    let spec = specs::<F>(s).remove(0);
    let protected = protect_with(s, method, generator, global, &spec, &corpus, &mut manifest)?;
    let records: Vec<MetricsRecord> = corpus
        .iter()
        .zip(&protected)
        .enumerate()
        .map(|(i, (x, p))| evaluate_image(&spec, x, p, None, method_name(method), i, s.attack.seed))
        .collect::<Result<_>>()?;
    let rep = distribution_report(method_name(method), records.iter().map(|r| r.output_mse).collect())?;
    fs::create_dir_all(&common.out)?;
    write_records_csv(&records, &common.out.join("per_image.csv"))?;
    write_text(&common.out.join("summary.txt"), &rep.summary())?;
    manifest.output("per_image.csv");
    manifest.output("summary.txt");
    manifest.write(&common.out)?;
    print!("{}", rep.summary());
    Ok(())
}

fn parse_settings(list: &str) -> Result<Vec<Compression>> {
    let q = |v: &str| -> Result<u8> {
        let q: u8 = v.trim().parse().map_err(|_| Error::Config(format!("bad quality `{v}`")))?;
        JpegConfig::reference(q)?;
        Ok(q)
    };
    list.split(',')
        .map(|item| {
            let item = item.trim();
            if item == "none" {
                Ok(Compression::None)
            } else if let Some((a, b)) = item.split_once('+') {
                Ok(Compression::Double(q(a)?, q(b)?))
            } else {
                Ok(Compression::Single(q(item)?))
            }
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
pub fn robustness_cmd<F: Scalar>(
    s: &Settings,
    method: ProtectMethod,
    generator: Option<&Path>,
    global: Option<&Path>,
    common: &CommonArgs,
    qualities: &str,
    mut manifest: Manifest,
) -> Result<()> {
    let settings = parse_settings(qualities)?;
    let paths = corpus_paths(&common.corpus)?;
    manifest.inputs(&paths);
    let corpus = load_corpus::<F>(&paths)?;
    let spec = specs::<F>(s).remove(0);
    let protected = protect_with(s, method, generator, global, &spec, &corpus, &mut manifest)?;
    let rows = robustness_eval(&spec, &protected, &settings)?;
    fs::create_dir_all(&common.out)?;
    let mut text = String::from("compression,output_mse,output_mse_std\n");
    for r in &rows {
        text.push_str(&format!("{},{:.8e},{:.8e}\n", r.compression, r.output_mse, r.output_mse_std));
    }
    write_text(&common.out.join("robustness.csv"), &text)?;
    manifest.output("robustness.csv");
    manifest.write(&common.out)?;
    println!("compression,output_mse");
    for r in &rows {
        println!("{},{:.6e}", r.compression, r.output_mse);
    }
    Ok(())
}

pub fn bench_cmd<F: Scalar>(
    s: &Settings,
    common: &CommonArgs,
    generator: &Path,
    global: Option<&Path>,
    repeats: usize,
    mut manifest: Manifest,
) -> Result<()> {
    let paths = corpus_paths(&common.corpus)?;
    manifest.input(&paths[0]);
    manifest.input(generator);
    let img: Tensor<F> = load_image(&paths[0])?;
    let params: ModelParams<F> = load_checkpoint(generator)?;
    let gp = global.map(|p| load_global::<F>(p, s.attack.epsilon)).transpose()?;
    let spec = specs::<F>(s).remove(0);
    let eps = s.attack.epsilon;
    let attack = AttackConfig { steps: 100, ..s.attack.clone() };
    let stats = [
        runtime_bench("generator", repeats, || {
            apply_protection(&params, &img, gp.as_ref().map(|g| &g.delta), eps).map(|_| ())
        })?,
        runtime_bench("ifgsm", repeats, || ifgsm(&spec, &img, &attack).map(|_| ()))?,
        runtime_bench("ipgd", repeats, || ipgd(&spec, &img, &attack).map(|_| ()))?,
    ];
    fs::create_dir_all(&common.out)?;
    let mut text = String::from("method,runs,mean_ms,std_ms\n");
    for b in &stats {
        text.push_str(&format!("{},{},{:.4},{:.4}\n", b.name, b.runs, b.mean_ms, b.std_ms));
    }
    write_text(&common.out.join("bench.csv"), &text)?;
    manifest.output("bench.csv");
    manifest.write(&common.out)?;
    print!("{text}");
    Ok(())
}

pub fn jpeg_roundtrip_cmd<F: Scalar>(
    input: &Path,
    quality: u8,
    mode: &str,
    subsampling: &str,
    out: Option<&Path>,
    mut manifest: Manifest,
) -> Result<()> {
    let cfg = JpegConfig::new(quality, mode.parse()?, subsampling.parse()?)?;
    let img: Tensor<F> = load_image(input)?;
    let pixels = img.scale(F::lit(255.0));
    let decoded = roundtrip(&pixels, &cfg)?;
    let mse = pixels.mse(&decoded)?;
    let psnr = protect_core::eval::psnr(&pixels, &decoded, 255.0)?;
    let text = format!("quality = {quality}\nmode = {mode}\nmse = {mse:.6}\npsnr = {psnr:.4}\n");
    if let Some(dir) = out {
        manifest.input(input);
        fs::create_dir_all(dir)?;
        save_image(&decoded.scale(F::lit(1.0 / 255.0)), &dir.join("decoded.ppm"))?;
        write_text(&dir.join("report.txt"), &text)?;
        manifest.output("decoded.ppm");
        manifest.output("report.txt");
        manifest.write(dir)?;
    }
    print!("{text}");
    Ok(())
}
