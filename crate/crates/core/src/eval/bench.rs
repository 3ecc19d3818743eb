use std::time::Instant;

use crate::error::{Error, Result};

/// Wall-clock statistics in milliseconds.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchStat {
    pub name: String,
    pub runs: usize,
    pub mean_ms: f64,
    /// Population standard deviation; 0 for a single run.
    pub std_ms: f64,
}

/// Runs `f` once to warm up, then `repeats` timed times.
pub fn runtime_bench(name: &str, repeats: usize, mut f: impl FnMut() -> Result<()>) -> Result<BenchStat> {
    if repeats == 0 {
        return Err(Error::InvalidArgument("runtime_bench needs at least one repeat".into()));
    }
    f()?;
    let mut times = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        let start = Instant::now();
        f()?;
        times.push(start.elapsed().as_secs_f64() * 1e3);
    }
    let n = times.len() as f64;
    let mean = times.iter().sum::<f64>() / n;
    let var = times.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / n;
    Ok(BenchStat { name: name.to_string(), runs: repeats, mean_ms: mean, std_ms: var.sqrt() })
}
