use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "protect", version, about = "Adversarial protection of images against manipulation models")]
pub struct Cli {
    /// Seed for every random choice of the run.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Flat `key = value` file; command-line flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Arithmetic precision.
    #[arg(long, global = true, value_enum)]
    pub precision: Option<Precision>,
    /// Worker threads for per-image work (1 keeps everything sequential).
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Precision {
    F32,
    F64,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write a deterministic synthetic corpus of PPM images.
    Synth {
        #[arg(long, default_value_t = 8)]
        n: usize,
        #[arg(long, default_value_t = 64)]
        size: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Optimize one global perturbation over the corpus.
    OptimizeGlobal(TrainArgs),
    /// Train the conditional perturbation generator.
    TrainGenerator(GeneratorArgs),
    /// Per-image baseline attack.
    Attack {
        #[arg(value_enum)]
        kind: AttackKind,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Protect images with a trained generator.
    Protect {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        generator: PathBuf,
        #[arg(long)]
        global: Option<PathBuf>,
    },
    /// Evaluation experiments.
    Evaluate {
        #[command(subcommand)]
        what: Evaluate,
    },
    /// Reference or surrogate codec utilities.
    Jpeg {
        #[command(subcommand)]
        what: Jpeg,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AttackKind {
    Ifgsm,
    Ipgd,
}

/// Options shared by every command that reads a corpus and writes results.
#[derive(Args, Debug, Clone)]
pub struct CommonArgs {
    /// Directory of PPM images.
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Comma-separated manipulation tasks: recon, blend.
    #[arg(long)]
    pub tasks: Option<String>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub step_size: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// l1, l2, l2root or linf.
    #[arg(long)]
    pub norm: Option<String>,
    /// off, random or a quality in 1..=99.
    #[arg(long)]
    pub jpeg: Option<String>,
    /// true, identity, cubic, soft or sin.
    #[arg(long)]
    pub round_mode: Option<String>,
    /// 444 or 420.
    #[arg(long)]
    pub subsampling: Option<String>,
    /// Seed of the toy manipulation models.
    #[arg(long)]
    pub model_seed: Option<u64>,
}

#[derive(Args, Debug, Clone)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Args, Debug, Clone)]
pub struct GeneratorArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Global perturbation checkpoint; omit together with --image-only.
    #[arg(long)]
    pub global: Option<PathBuf>,
    /// Condition on the image alone.
    #[arg(long)]
    pub image_only: bool,
    #[arg(long)]
    pub base_width: Option<usize>,
}

#[derive(Subcommand, Debug)]
pub enum Evaluate {
    /// Perturbation level versus output error over a grid (lambda or epsilon).
    Sweep {
        #[arg(value_enum)]
        method: SweepMethod,
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated grid; epsilon for attacks, lambda for learned methods.
        #[arg(long)]
        grid: String,
        /// Evaluation images; defaults to the training corpus.
        #[arg(long)]
        eval_corpus: Option<PathBuf>,
        #[arg(long)]
        base_width: Option<usize>,
        /// Iterations for the global perturbation fed to the generator.
        #[arg(long)]
        global_steps: Option<usize>,
    },
    /// Per-image output errors and their spread.
    Distribution {
        #[command(flatten)]
        source: MethodSource,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Output error after true-rounding compression of protected images.
    Robustness {
        #[command(flatten)]
        source: MethodSource,
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated settings: none, a quality, or `a+b` for two passes.
        #[arg(long, default_value = "none,80,30,30+80")]
        qualities: String,
    },
    /// Wall-clock time per image for generator and baselines.
    Bench {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        generator: PathBuf,
        #[arg(long)]
        global: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        repeats: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SweepMethod {
    Ifgsm,
    Ipgd,
    Global,
    Generator,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ProtectMethod {
    Clean,
    Ifgsm,
    Ipgd,
    Global,
    Generator,
}

/// Which protection to evaluate and where its trained state lives.
#[derive(Args, Debug, Clone)]
pub struct MethodSource {
    #[arg(long, value_enum)]
    pub method: ProtectMethod,
    #[arg(long)]
    pub generator: Option<PathBuf>,
    #[arg(long)]
    pub global: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Jpeg {
    /// Compress and decompress one image, report the MSE.
    Roundtrip {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 75)]
        quality: u8,
        /// true, identity, cubic, soft or sin.
        #[arg(long, default_value = "true")]
        mode: String,
        #[arg(long, default_value = "420")]
        subsampling: String,
        /// Directory for the decoded image and manifest.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}
