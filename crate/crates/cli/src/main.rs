mod args;
mod commands;
mod manifest;
mod settings;

use std::process::ExitCode;

use clap::Parser;
use protect_core::attacks::AttackConfig;
use protect_core::io::ConfigFile;
use protect_core::{Result, Scalar};

use args::{Cli, Command, Evaluate, Jpeg, Precision};
use manifest::Manifest;
use settings::Settings;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    if cli.jobs == 0 {
        return Err(protect_core::Error::Config("--jobs must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build_global()
        .map_err(|e| protect_core::Error::Config(format!("thread pool: {e}")))?;
    let config = cli.config.as_deref().map(ConfigFile::load).transpose()?;
    // The precision comes out of the resolved settings, so resolve before dispatch.
    let settings = resolve_for(&cli, config.as_ref())?;
    match settings.precision {
        Precision::F32 => dispatch::<f32>(&cli, &settings),
        Precision::F64 => dispatch::<f64>(&cli, &settings),
    }
}

fn resolve_for(cli: &Cli, config: Option<&ConfigFile>) -> Result<Settings> {
    let r = |base: AttackConfig, common, width| {
        Settings::resolve(base, config, cli.seed, cli.precision, Some(common), width)
    };
    match &cli.command {
        Command::Synth { .. } | Command::Jpeg { .. } => {
            Settings::resolve(AttackConfig::default(), config, cli.seed, cli.precision, None, None)
        }
        Command::OptimizeGlobal(t) => r(AttackConfig::global(), &t.common, None),
        Command::TrainGenerator(g) => r(AttackConfig::generator(), &g.common, g.base_width),
        Command::Attack { kind, common } => {
            let base = match kind {
                args::AttackKind::Ifgsm => AttackConfig::ifgsm(),
                args::AttackKind::Ipgd => AttackConfig::ipgd(),
            };
            r(base, common, None)
        }
        Command::Protect { common, .. } => r(AttackConfig::default(), common, None),
        Command::Evaluate { what } => match what {
            Evaluate::Sweep { method, common, base_width, .. } => {
                let base = match method {
                    args::SweepMethod::Ifgsm => AttackConfig::ifgsm(),
                    args::SweepMethod::Ipgd => AttackConfig::ipgd(),
                    args::SweepMethod::Global => AttackConfig::global(),
                    args::SweepMethod::Generator => AttackConfig::generator(),
                };
                r(base, common, *base_width)
            }
            Evaluate::Distribution { source, common } | Evaluate::Robustness { source, common, .. } => {
                let base = match source.method {
                    args::ProtectMethod::Ipgd => AttackConfig::ipgd(),
                    _ => AttackConfig::ifgsm(),
                };
                r(base, common, None)
            }
            Evaluate::Bench { common, .. } => r(AttackConfig::ipgd(), common, None),
        },
    }
}

fn dispatch<F: Scalar>(cli: &Cli, s: &Settings) -> Result<()> {
    let mut echo = s.echo();
    echo.insert("jobs".into(), cli.jobs.to_string());
    let name = command_name(&cli.command);
    let m = Manifest::new(name, echo);
    match &cli.command {
        Command::Synth { n, size, out } => commands::synth(*n, *size, s.attack.seed, out, m),
        Command::OptimizeGlobal(t) => commands::optimize_global_cmd::<F>(s, &t.common, m),
        Command::TrainGenerator(g) => {
            commands::train_generator_cmd::<F>(s, &g.common, g.global.as_deref(), g.image_only, m)
        }
        Command::Attack { kind, common } => commands::attack_cmd::<F>(s, *kind, common, m),
        Command::Protect { common, generator, global } => {
            commands::protect_cmd::<F>(s, common, generator, global.as_deref(), m)
        }
        Command::Evaluate { what } => match what {
            Evaluate::Sweep { method, common, grid, eval_corpus, global_steps, .. } => {
                commands::sweep_cmd::<F>(s, *method, common, grid, eval_corpus.as_deref(), *global_steps, m)
            }
            Evaluate::Distribution { source, common } => commands::distribution_cmd::<F>(
                s,
                source.method,
                source.generator.as_deref(),
                source.global.as_deref(),
                common,
                m,
            ),
            Evaluate::Robustness { source, common, qualities } => commands::robustness_cmd::<F>(
                s,
                source.method,
                source.generator.as_deref(),
                source.global.as_deref(),
                common,
                qualities,
                m,
            ),
            Evaluate::Bench { common, generator, global, repeats } => {
                commands::bench_cmd::<F>(s, common, generator, global.as_deref(), *repeats, m)
            }
        },
        Command::Jpeg { what: Jpeg::Roundtrip { input, quality, mode, subsampling, out } } => {
            commands::jpeg_roundtrip_cmd::<F>(input, *quality, mode, subsampling, out.as_deref(), m)
        }
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Synth { .. } => "synth",
        Command::OptimizeGlobal(_) => "optimize-global",
        Command::TrainGenerator(_) => "train-generator",
        Command::Attack { .. } => "attack",
        Command::Protect { .. } => "protect",
        Command::Evaluate { what } => match what {
            Evaluate::Sweep { .. } => "evaluate sweep",
            Evaluate::Distribution { .. } => "evaluate distribution",
            Evaluate::Robustness { .. } => "evaluate robustness",
            Evaluate::Bench { .. } => "evaluate bench",
        },
        Command::Jpeg { .. } => "jpeg roundtrip",
    }
}
