//! Resolution of defaults, configuration file and flags into one run setup.

use std::collections::BTreeMap;
use std::str::FromStr;

use protect_core::attacks::AttackConfig;
use protect_core::io::ConfigFile;
use protect_core::{Error, Result};

use crate::args::{CommonArgs, Precision};

pub const CONFIG_KEYS: &[&str] = &[
    "epsilon",
    "step_size",
    "steps",
    "lambda",
    "task_lambdas",
    "norm",
    "jpeg",
    "round_mode",
    "subsampling",
    "seed",
    "tasks",
    "model_seed",
    "base_width",
    "precision",
];

pub const DEFAULT_MODEL_SEED: u64 = 7;
pub const DEFAULT_BASE_WIDTH: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Task {
    Recon,
    Blend,
}

impl FromStr for Task {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "recon" => Ok(Task::Recon),
            "blend" => Ok(Task::Blend),
            other => Err(Error::Config(format!("unknown task `{other}` (recon, blend)"))),
        }
    }
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Recon => "recon",
            Task::Blend => "blend",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Settings {
    pub attack: AttackConfig,
    pub tasks: Vec<Task>,
    pub model_seed: u64,
    pub base_width: usize,
    pub precision: Precision,
}

fn parse<T: FromStr>(key: &str, v: &str, expect: &str) -> Result<T> {
    v.trim().parse().map_err(|_| Error::Config(format!("`{key}` must be {expect}, got `{v}`")))
}

fn parse_list<T: FromStr>(key: &str, v: &str, expect: &str) -> Result<Vec<T>> {
    v.split(',').filter(|s| !s.trim().is_empty()).map(|s| parse(key, s, expect)).collect()
}

impl Settings {
    /// Defaults, then the config file, then command-line values.
    pub fn resolve(
        base: AttackConfig,
        config: Option<&ConfigFile>,
        seed: Option<u64>,
        precision: Option<Precision>,
        common: Option<&CommonArgs>,
        base_width: Option<usize>,
    ) -> Result<Self> {
        let mut raw: BTreeMap<String, String> = BTreeMap::new();
        if let Some(c) = config {
            c.reject_unknown(CONFIG_KEYS)?;
            raw.extend(c.entries.clone());
        }
        let mut set = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                raw.insert(k.to_string(), v);
            }
        };
        set("seed", seed.map(|s| s.to_string()));
        set("precision", precision.map(|p| if p == Precision::F64 { "f64" } else { "f32" }.to_string()));
        set("base_width", base_width.map(|b| b.to_string()));
        if let Some(c) = common {
            set("epsilon", c.epsilon.map(|v| v.to_string()));
            set("step_size", c.step_size.map(|v| v.to_string()));
            set("steps", c.steps.map(|v| v.to_string()));
            set("lambda", c.lambda.map(|v| v.to_string()));
            set("norm", c.norm.clone());
            set("jpeg", c.jpeg.clone());
            set("round_mode", c.round_mode.clone());
            set("subsampling", c.subsampling.clone());
            set("tasks", c.tasks.clone());
            set("model_seed", c.model_seed.map(|v| v.to_string()));
        }

        let mut attack = base;
        let mut tasks = vec![Task::Recon];
        let mut model_seed = DEFAULT_MODEL_SEED;
        let mut width = DEFAULT_BASE_WIDTH;
        let mut prec = Precision::F32;
        for (k, v) in &raw {
            match k.as_str() {
                "epsilon" => attack.epsilon = parse(k, v, "a number")?,
                "step_size" => attack.step_size = parse(k, v, "a number")?,
                "steps" => attack.steps = parse(k, v, "a non-negative integer")?,
                "lambda" => attack.lambda = parse(k, v, "a number")?,
                "task_lambdas" => attack.task_lambdas = Some(parse_list(k, v, "a list of numbers")?),
                "norm" => attack.norm = v.parse()?,
                "jpeg" => attack.jpeg = v.parse()?,
                "round_mode" => attack.round_mode = v.parse()?,
                "subsampling" => attack.subsampling = v.parse()?,
                "seed" => attack.seed = parse(k, v, "a non-negative integer")?,
                "tasks" => tasks = parse_list(k, v, "recon or blend")?,
                "model_seed" => model_seed = parse(k, v, "a non-negative integer")?,
                "base_width" => width = parse(k, v, "one of 8, 16, 32, 64")?,
                "precision" => {
                    prec = match v.as_str() {
                        "f32" => Precision::F32,
                        "f64" => Precision::F64,
                        other => return Err(Error::Config(format!("precision `{other}` is not f32 or f64"))),
                    }
                }
                other => return Err(Error::Config(format!("unknown configuration key `{other}`"))),
            }
        }
        if tasks.is_empty() {
            return Err(Error::Config("at least one task is required".into()));
        }
        attack.validate()?;
        Ok(Self { attack, tasks, model_seed, base_width: width, precision: prec })
    }

    /// Resolved values, for the run manifest.
    pub fn echo(&self) -> BTreeMap<String, String> {
        let a = &self.attack;
        let mut m = BTreeMap::new();
        m.insert("epsilon".into(), a.epsilon.to_string());
        m.insert("step_size".into(), a.step_size.to_string());
        m.insert("steps".into(), a.steps.to_string());
        m.insert("lambda".into(), a.lambda.to_string());
        if let Some(l) = &a.task_lambdas {
            m.insert("task_lambdas".into(), l.iter().map(ToString::to_string).collect::<Vec<_>>().join(","));
        }
        m.insert("norm".into(), a.norm.to_string());
        m.insert("jpeg".into(), a.jpeg.to_string());
        m.insert("round_mode".into(), a.round_mode.to_string());
        m.insert("subsampling".into(), a.subsampling.to_string());
        m.insert("seed".into(), a.seed.to_string());
        m.insert("tasks".into(), self.tasks.iter().map(|t| t.name()).collect::<Vec<_>>().join(","));
        m.insert("model_seed".into(), self.model_seed.to_string());
        m.insert("base_width".into(), self.base_width.to_string());
        m.insert(
            "precision".into(),
            if self.precision == Precision::F64 { "f64" } else { "f32" }.into(),
        );
        m
    }
}
