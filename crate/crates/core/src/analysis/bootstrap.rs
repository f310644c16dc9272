//! Bootstrap distribution of the sample mean.
//!
//! Two routes produce the same summary type: a seeded Monte-Carlo resampler
//! and, for small samples, exact enumeration of every distinct resample
//! (as a multiset, weighted by its multinomial probability).

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest sample accepted by [`BootstrapMode::Exhaustive`]; 12 gives
/// about 1.35 million distinct resamples.
pub const MAX_EXHAUSTIVE: usize = 12;

#[derive(Debug, Error, PartialEq)]
pub enum BootstrapError {
    #[error("cannot bootstrap an empty sample")]
    EmptySample,
    #[error("exhaustive bootstrap supports at most {MAX_EXHAUSTIVE} observations, got {0}")]
    TooLargeForExhaustive(usize),
    #[error("resample count must be positive")]
    ZeroResamples,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BootstrapMode {
    /// This many resamples drawn with replacement.
    Resample(usize),
    /// Every possible resample, exactly weighted.
    Exhaustive,
}

impl Default for BootstrapMode {
    fn default() -> Self {
        BootstrapMode::Resample(100)
    }
}

/// Summary of the resample-mean distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapSummary {
    pub mean: f64,
    pub variance: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// A discrete distribution with integer weights, sorted by value.
#[derive(Debug, Clone)]
struct Weighted {
    points: Vec<(f64, u64)>,
    total: u64,
}

impl Weighted {
    fn new(mut points: Vec<(f64, u64)>) -> Self {
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        let total = points.iter().map(|p| p.1).sum();
        Weighted { points, total }
    }

    /// Smallest value whose cumulative weight reaches `q` of the total.
    fn quantile(&self, q: f64) -> f64 {
        let target = (q * self.total as f64).ceil().max(1.0) as u64;
        let mut cum = 0u64;
        for &(v, w) in &self.points {
            cum += w;
            if cum >= target {
                return v;
            }
        }
        self.points.last().expect("non-empty").0
    }

    fn mean_and_variance(&self) -> (f64, f64) {
        let total = self.total as f64;
        let mean = self.points.iter().map(|&(v, w)| v * w as f64).sum::<f64>() / total;
        let var = self
            .points
            .iter()
            .map(|&(v, w)| (v - mean).powi(2) * w as f64)
            .sum::<f64>()
            / total;
        (mean, var)
    }

    fn summarize(&self, level: f64) -> BootstrapSummary {
        let alpha = (1.0 - level) / 2.0;
        let (mean, variance) = self.mean_and_variance();
        BootstrapSummary {
            mean,
            variance,
            ci_low: self.quantile(alpha),
            ci_high: self.quantile(1.0 - alpha),
        }
    }
}

fn sample_mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn resampled(sample: &[f64], b: usize, rng: &mut impl Rng) -> Weighted {
    let n = sample.len();
    let points = (0..b)
        .map(|_| {
            let s: f64 = (0..n).map(|_| sample[rng.random_range(0..n)]).sum();
            (s / n as f64, 1)
        })
        .collect();
    Weighted::new(points)
}

/// All multisets of size n over n positions, as occurrence counts.
fn exhaustive(sample: &[f64]) -> Weighted {
    let n = sample.len();
    let factorial: Vec<u64> = (0..=n as u64)
        .scan(1u64, |acc, k| {
            if k > 0 {
                *acc *= k;
            }
            Some(*acc)
        })
        .collect();
    let mut points = Vec::new();
    let mut counts = vec![0usize; n];

    fn recurse(
        pos: usize,
        left: usize,
        counts: &mut [usize],
        sample: &[f64],
        factorial: &[u64],
        points: &mut Vec<(f64, u64)>,
    ) {
        let n = sample.len();
        if pos == n - 1 {
            counts[pos] = left;
            let weight = counts
                .iter()
                .fold(factorial[n], |acc, &k| acc / factorial[k]);
            let sum: f64 = counts
                .iter()
                .zip(sample)
                .map(|(&k, &x)| k as f64 * x)
                .sum();
            points.push((sum / n as f64, weight));
            return;
        }
        for k in 0..=left {
            counts[pos] = k;
            recurse(pos + 1, left - k, counts, sample, factorial, points);
        }
    }

    recurse(0, n, &mut counts, sample, &factorial, &mut points);
    Weighted::new(points)
}

/// Bootstrap the mean of `sample` and report the resample-mean variance and
/// the percentile interval at `level` (e.g. 0.95).
pub fn bootstrap_mean(
    sample: &[f64],
    mode: BootstrapMode,
    level: f64,
    rng: &mut impl Rng,
) -> Result<BootstrapSummary, BootstrapError> {
    if sample.is_empty() {
        return Err(BootstrapError::EmptySample);
    }
    let dist = match mode {
        BootstrapMode::Resample(0) => return Err(BootstrapError::ZeroResamples),
        BootstrapMode::Resample(b) => resampled(sample, b, rng),
        BootstrapMode::Exhaustive if sample.len() > MAX_EXHAUSTIVE => {
            return Err(BootstrapError::TooLargeForExhaustive(sample.len()))
        }
        BootstrapMode::Exhaustive => exhaustive(sample),
    };
    // Rounding in resample sums would otherwise leave a constant sample with
    // a hair of spread.
    if sample.iter().all(|&x| x == sample[0]) {
        return Ok(BootstrapSummary {
            mean: sample[0],
            variance: 0.0,
            ci_low: sample[0],
            ci_high: sample[0],
        });
    }
    let mut summary = dist.summarize(level);
    // The point estimate is the sample mean itself, not the resample average.
    summary.mean = sample_mean(sample);
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from;

    #[test]
    fn constant_sample_has_zero_width() {
        for mode in [BootstrapMode::Resample(50), BootstrapMode::Exhaustive] {
            let s = bootstrap_mean(&[0.5; 6], mode, 0.95, &mut rng_from(1, &[])).unwrap();
            assert_eq!(s.mean, 0.5);
            assert_eq!(s.variance, 0.0);
            assert_eq!(s.ci_low, 0.5);
            assert_eq!(s.ci_high, 0.5);
        }
    }

    #[test]
    fn two_point_sample_enumerates_four_resamples() {
        // {0,0},{0,1},{1,0},{1,1}: means 0, .5, .5, 1
        let s = bootstrap_mean(&[0.0, 1.0], BootstrapMode::Exhaustive, 0.95, &mut rng_from(1, &[]))
            .unwrap();
        assert_eq!(s.mean, 0.5);
        assert_eq!(s.variance, 0.125);
        assert_eq!(s.ci_low, 0.0);
        assert_eq!(s.ci_high, 1.0);
        let d = exhaustive(&[0.0, 1.0]);
        assert_eq!(d.total, 4);
        assert_eq!(d.mean_and_variance().0, 0.5);
    }

    #[test]
    fn exhaustive_variance_is_plug_in_variance_over_n() {
        let xs = [0.1, -0.4, 0.9, 0.3, 0.0, 0.25, -0.6];
        let n = xs.len() as f64;
        let m = sample_mean(&xs);
        let plug_in = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
        let s = bootstrap_mean(&xs, BootstrapMode::Exhaustive, 0.95, &mut rng_from(1, &[])).unwrap();
        assert!((s.variance - plug_in / n).abs() < 1e-14);
        assert!(s.ci_low <= s.mean && s.mean <= s.ci_high);
    }

    #[test]
    fn resampling_is_seeded_and_converges() {
        let xs = [0.1, -0.4, 0.9, 0.3, 0.0, 0.25, -0.6, 0.7];
        let a = bootstrap_mean(&xs, BootstrapMode::Resample(100), 0.95, &mut rng_from(5, &[]))
            .unwrap();
        let b = bootstrap_mean(&xs, BootstrapMode::Resample(100), 0.95, &mut rng_from(5, &[]))
            .unwrap();
        assert_eq!(a, b);
        let big = bootstrap_mean(&xs, BootstrapMode::Resample(200_000), 0.95, &mut rng_from(5, &[]))
            .unwrap();
        let exact = bootstrap_mean(&xs, BootstrapMode::Exhaustive, 0.95, &mut rng_from(5, &[]))
            .unwrap();
        assert!((big.variance - exact.variance).abs() < 0.02 * exact.variance);
    }

    #[test]
    fn quantile_rank_rule() {
        // 100 equally weighted points 1..=100: 2.5% -> 3rd, 97.5% -> 98th.
        let d = Weighted::new((1..=100).map(|i| (i as f64, 1)).collect());
        assert_eq!(d.quantile(0.025), 3.0);
        assert_eq!(d.quantile(0.975), 98.0);
    }

    #[test]
    fn errors() {
        let mut rng = rng_from(1, &[]);
        assert_eq!(
            bootstrap_mean(&[], BootstrapMode::Exhaustive, 0.95, &mut rng),
            Err(BootstrapError::EmptySample)
        );
        assert_eq!(
            bootstrap_mean(&[0.0; 13], BootstrapMode::Exhaustive, 0.95, &mut rng),
            Err(BootstrapError::TooLargeForExhaustive(13))
        );
        assert_eq!(
            bootstrap_mean(&[0.0], BootstrapMode::Resample(0), 0.95, &mut rng),
            Err(BootstrapError::ZeroResamples)
        );
    }
}
