//! Trial statistics and a parallel trial runner.

use rayon::prelude::*;

use crate::error::Result;
use crate::rng::Rng;

/// Sample mean and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub std_err: f64,
}

pub fn summarize(xs: &[f64]) -> Summary {
    let n = xs.len();
    if n == 0 {
        return Summary { n, mean: f64::NAN, std_err: f64::NAN };
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let std_err = if n < 2 {
        0.0
    } else {
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    };
    Summary { n, mean, std_err }
}

/// `√(se_a² + se_b²)`.
pub fn pooled_std_err(a: &Summary, b: &Summary) -> f64 {
    (a.std_err * a.std_err + b.std_err * b.std_err).sqrt()
}

/// Runs `trials` independent trials in parallel, trial `t` on the
/// substream `t` of `Rng::new(seed)`. Results come back in trial order.
pub fn run_trials<T, F>(seed: u64, trials: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &Rng) -> Result<T> + Sync,
{
    let base = Rng::new(seed);
    (0..trials)
        .into_par_iter()
        .map(|t| f(t, &base.substream(t as u64)))
        .collect()
}
