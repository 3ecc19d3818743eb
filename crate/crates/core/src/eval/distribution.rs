use std::fmt::Write;

use crate::error::{Error, Result};

/// Spread of per-image output-to-target errors.
#[derive(Clone, Debug, PartialEq)]
pub struct DistributionReport {
    pub method: String,
    pub values: Vec<f64>,
    pub mean: f64,
    /// Population variance.
    pub variance: f64,
    pub max: f64,
    /// `max / mean`; 1 for a constant list, infinite when the mean is 0 and the max is not.
    pub max_over_mean: f64,
}

pub fn distribution_report(method: &str, values: Vec<f64>) -> Result<DistributionReport> {
    if values.is_empty() {
        return Err(Error::EmptyDataset("no per-image errors to summarize".into()));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let variance = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let max_over_mean = if mean != 0.0 {
        max / mean
    } else if max == 0.0 {
        1.0
    } else {
        f64::INFINITY
    };
    Ok(DistributionReport { method: method.to_string(), values, mean, variance, max, max_over_mean })
}

impl DistributionReport {
    /// Human-readable `key = value` summary.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "method = {}", self.method);
        let _ = writeln!(s, "images = {}", self.values.len());
        let _ = writeln!(s, "mean = {:.8e}", self.mean);
        let _ = writeln!(s, "variance = {:.8e}", self.variance);
        let _ = writeln!(s, "max = {:.8e}", self.max);
        let _ = writeln!(s, "max_over_mean = {:.6}", self.max_over_mean);
        s
    }
}
