//! Protection procedures: per-image sign attacks, the dataset-global
//! perturbation and the conditional generator, all sharing one loss.

mod adam;
mod baseline;
mod config;
mod generator;
mod global;
mod loss;
mod runlog;

pub use adam::AdamState;
pub use baseline::{ifgsm, ipgd, project, AttackOutcome};
pub use config::{AttackConfig, JpegMode};
pub use generator::{train_generator, TrainedGenerator};
pub use global::{optimize_global, GlobalPerturbation};
pub use loss::{dataset_loss, protection_loss, LossTerms};
pub use runlog::{RunLog, StepRecord};
