use std::str::FromStr;

use crate::autodiff::LossKind;
use crate::error::{Error, Result};
use crate::jpeg::{JpegConfig, RoundMode, Subsampling};

/// Compression applied inside the training loss.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum JpegMode {
    Off,
    Fixed(u8),
    /// Quality drawn uniformly from `1..=99` every step.
    Random,
}

impl FromStr for JpegMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "off" | "none" => Ok(Self::Off),
            "random" => Ok(Self::Random),
            q => {
                let q: u8 = q
                    .parse()
                    .map_err(|_| Error::Config(format!("jpeg mode `{s}` is not off, random or a quality")))?;
                if !(1..=99).contains(&q) {
                    return Err(Error::Config(format!("jpeg quality {q} outside 1..=99")));
                }
                Ok(Self::Fixed(q))
            }
        }
    }
}

impl std::fmt::Display for JpegMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Off => f.write_str("off"),
            Self::Fixed(q) => write!(f, "{q}"),
            Self::Random => f.write_str("random"),
        }
    }
}

/// Hyperparameters shared by every protection procedure. `step_size` is the
/// sign-step for the per-image attacks and the Adam learning rate otherwise.
#[derive(Clone, Debug, PartialEq)]
pub struct AttackConfig {
    pub epsilon: f64,
    pub step_size: f64,
    pub steps: usize,
    /// Weight of the perturbation term.
    pub lambda: f64,
    /// Optional per-task override of `lambda`, indexed like the task list.
    pub task_lambdas: Option<Vec<f64>>,
    pub norm: LossKind,
    pub jpeg: JpegMode,
    pub round_mode: RoundMode,
    pub subsampling: Subsampling,
    pub seed: u64,
}

pub const DEFAULT_EPSILON: f64 = 0.05;

impl Default for AttackConfig {
    fn default() -> Self {
        Self {
            epsilon: DEFAULT_EPSILON,
            step_size: 0.01,
            steps: 100,
            lambda: 0.0,
            task_lambdas: None,
            norm: LossKind::L2,
            jpeg: JpegMode::Off,
            round_mode: RoundMode::Sin,
            subsampling: Subsampling::S420,
            seed: 0,
        }
    }
}

impl AttackConfig {
    /// 100 sign steps of 0.01.
    pub fn ifgsm() -> Self {
        Self::default()
    }

    /// 100 sign steps of 0.01.
    pub fn ipgd() -> Self {
        Self::default()
    }

    /// Adam at 1e-3 for 2000 iterations.
    pub fn global() -> Self {
        Self { step_size: 1e-3, steps: 2000, lambda: 1.0, ..Self::default() }
    }

    /// Adam at 1e-4 for 5000 iterations.
    pub fn generator() -> Self {
        Self { step_size: 1e-4, steps: 5000, lambda: 1.0, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::Config(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if !(self.step_size >= 0.0) || !self.step_size.is_finite() {
            return Err(Error::Config(format!("step size must be finite and non-negative, got {}", self.step_size)));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::Config(format!("lambda must be finite and non-negative, got {}", self.lambda)));
        }
        if let Some(ls) = &self.task_lambdas {
            if ls.iter().any(|l| !(*l >= 0.0) || !l.is_finite()) {
                return Err(Error::Config("per-task lambdas must be finite and non-negative".into()));
            }
        }
        if let JpegMode::Fixed(q) = self.jpeg {
            JpegConfig::new(q, self.round_mode, self.subsampling)?;
        }
        Ok(())
    }

    pub fn lambda_for(&self, task: usize) -> f64 {
        self.task_lambdas.as_ref().and_then(|l| l.get(task).copied()).unwrap_or(self.lambda)
    }

    /// Surrogate codec configuration at quality `q`.
    pub fn codec(&self, q: u8) -> Result<JpegConfig> {
        JpegConfig::new(q, self.round_mode, self.subsampling)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_messages() {
        let bad = AttackConfig { epsilon: 0.0, ..AttackConfig::default() };
        assert!(bad.validate().unwrap_err().to_string().contains("epsilon"));
        let bad = AttackConfig { lambda: -1.0, ..AttackConfig::default() };
        assert!(bad.validate().unwrap_err().to_string().contains("lambda"));
        let bad = AttackConfig { jpeg: JpegMode::Fixed(100), ..AttackConfig::default() };
        assert!(bad.validate().is_err());
        assert!(AttackConfig::generator().validate().is_ok());
    }

    #[test]
    fn jpeg_mode_parsing() {
        assert_eq!("off".parse::<JpegMode>().unwrap(), JpegMode::Off);
        assert_eq!("random".parse::<JpegMode>().unwrap(), JpegMode::Random);
        assert_eq!("80".parse::<JpegMode>().unwrap(), JpegMode::Fixed(80));
        assert!("0".parse::<JpegMode>().is_err());
        assert!("high".parse::<JpegMode>().is_err());
    }

    #[test]
    fn per_task_lambda_falls_back() {
        let cfg = AttackConfig { lambda: 2.0, task_lambdas: Some(vec![0.5]), ..AttackConfig::default() };
        assert_eq!(cfg.lambda_for(0), 0.5);
        assert_eq!(cfg.lambda_for(1), 2.0);
    }
}
