//! Order statistics, weighted moments, and the seeded percentile bootstrap.
//!
//! Seed contract: resample `i` of a bootstrap seeded with `s` draws from a
//! ChaCha8 generator keyed by `s` on stream `i`. Resamples are therefore
//! independent of evaluation order and thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BootstrapConfig {
    pub resamples: usize,
    /// Confidence level in percent.
    pub level: f64,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            resamples: 1000,
            level: 95.0,
            seed: 0,
        }
    }
}

impl BootstrapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.resamples == 0 {
            return Err(Error::InvalidParameter("bootstrap needs at least one resample".into()));
        }
        if !(self.level > 0.0 && self.level < 100.0) {
            return Err(Error::InvalidParameter(format!(
                "confidence level {} outside (0, 100)",
                self.level
            )));
        }
        Ok(())
    }

    /// Same settings on an independent seed for a tagged sub-analysis.
    pub fn derived(&self, tag: u64) -> Self {
        BootstrapConfig {
            seed: derive_seed(self.seed, tag),
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub low: f64,
    pub high: f64,
}

impl Interval {
    pub fn point(v: f64) -> Self {
        Interval { low: v, high: v }
    }

    pub fn contains(&self, v: f64) -> bool {
        self.low <= v && v <= self.high
    }
}

/// SplitMix64 finalizer over `seed ^ tag`-style mixing.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Nearest-rank percentile of ascending data: the smallest value with at
/// least `pct`% of the sample at or below it.
pub fn nearest_rank(sorted: &[f64], pct: f64) -> f64 {
    assert!(!sorted.is_empty(), "nearest_rank on empty sample");
    let n = sorted.len();
    let rank = ((pct / 100.0) * n as f64 - 1e-9).ceil().max(1.0) as usize;
    sorted[rank.min(n) - 1]
}

/// Percentile interval at `level`% from bootstrap replicates.
pub fn percentile_interval(mut stats: Vec<f64>, level: f64) -> Interval {
    stats.sort_by(f64::total_cmp);
    let tail = (100.0 - level) / 2.0;
    Interval {
        low: nearest_rank(&stats, tail),
        high: nearest_rank(&stats, 100.0 - tail),
    }
}

/// Runs `statistic` once per resample stream and returns the percentile
/// interval. Replicates returning `None` (degenerate resamples) are skipped.
pub fn bootstrap<F>(cfg: &BootstrapConfig, statistic: F) -> Result<Interval>
where
    F: Fn(&mut ChaCha8Rng) -> Option<f64> + Sync,
{
    cfg.validate()?;
    let run = |i: usize| statistic(&mut stream_rng(cfg.seed, i as u64));
    #[cfg(feature = "parallel")]
    let replicates: Vec<Option<f64>> = {
        use rayon::prelude::*;
        (0..cfg.resamples).into_par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let replicates: Vec<Option<f64>> = (0..cfg.resamples).map(run).collect();

    let stats: Vec<f64> = replicates.into_iter().flatten().collect();
    if stats.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(percentile_interval(stats, cfg.level))
}

/// Indices of a with-replacement resample of size `n`.
pub fn resample_indices(rng: &mut ChaCha8Rng, n: usize) -> impl Iterator<Item = usize> + '_ {
    (0..n).map(move |_| rng.random_range(0..n))
}

/// Percentile bootstrap interval for the mean of `values`.
pub fn bootstrap_mean_ci(values: &[f64], cfg: &BootstrapConfig) -> Result<Interval> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = values.len();
    bootstrap(cfg, |rng| {
        let sum: f64 = resample_indices(rng, n).map(|i| values[i]).sum();
        Some(sum / n as f64)
    })
}

pub fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

pub fn weighted_mean(values: &[f64], weights: &[f64]) -> Option<f64> {
    let total: f64 = weights.iter().sum();
    if values.is_empty() || total <= 0.0 {
        return None;
    }
    Some(values.iter().zip(weights).map(|(v, w)| v * w).sum::<f64>() / total)
}

/// Sample standard deviation with the n-1 denominator.
pub fn sample_std(values: &[f64]) -> Option<f64> {
    let n = values.len();
    if n < 2 {
        return None;
    }
    let m = mean(values)?;
    let ss: f64 = values.iter().map(|v| (v - m).powi(2)).sum();
    Some((ss / (n - 1) as f64).sqrt())
}
