//! Metrics, perturbation sweeps, robustness tables and timing.

mod bench;
mod distribution;
mod method;
mod metrics;
mod robustness;
mod sweep;

pub use bench::{runtime_bench, BenchStat};
pub use distribution::{distribution_report, DistributionReport};
pub use method::{protect_corpus, Method};
pub use metrics::{evaluate_image, mse, psnr, write_records_csv, MetricsRecord};
pub use robustness::{robustness_eval, Compression, RobustnessRow};
pub use sweep::{matched_output_mse, scale_perturbation, sweep_curve, write_curve_csv, CurveRow};
