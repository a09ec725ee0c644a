use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CiesError, Result};
use crate::rng;
use crate::summary::{mean, quantile_sorted};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapCi {
    /// Mean of the original sample.
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    pub resamples: usize,
}

impl BootstrapCi {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Percentile bootstrap interval for the mean.
///
/// Resample `r` draws from its own substream keyed by `(seed, r)`, so the
/// result does not depend on how resamples are distributed over workers.
pub fn bootstrap_ci(
    scores: &[f64],
    resamples: usize,
    level: f64,
    seed: u64,
) -> Result<BootstrapCi> {
    if scores.is_empty() {
        return Err(CiesError::EmptySample);
    }
    if resamples == 0 {
        return Err(CiesError::invalid("bootstrap needs at least one resample"));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(CiesError::invalid(format!(
            "confidence level {level} outside (0, 1)"
        )));
    }
    let n = scores.len();
    let mut draw = Vec::with_capacity(n);
    let mut means = Vec::with_capacity(resamples);
    for r in 0..resamples {
        let mut rng = rng::substream(&[seed, rng::tag::BOOTSTRAP, r as u64]);
        draw.clear();
        draw.extend((0..n).map(|_| scores[rng.random_range(0..n)]));
        means.push(mean(&draw)?);
    }
    means.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    Ok(BootstrapCi {
        mean: mean(scores)?,
        lower: quantile_sorted(&means, tail),
        upper: quantile_sorted(&means, 1.0 - tail),
        level,
        resamples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn constant_sample_has_zero_width() {
        let ci = bootstrap_ci(&[0.7; 12], 500, 0.95, 1).unwrap();
        assert_eq!((ci.lower, ci.upper), (0.7, 0.7));
        assert_eq!(ci.width(), 0.0);
    }

    #[test]
    fn two_point_sample_spans_unit_interval() {
        // resample means are 0, 0.5, 1 with probabilities 1/4, 1/2, 1/4
        let ci = bootstrap_ci(&[0.0, 1.0], 10_000, 0.95, 8).unwrap();
        assert!((ci.lower - 0.0).abs() < 1e-12);
        assert!((ci.upper - 1.0).abs() < 1e-12);
        assert_eq!(ci.mean, 0.5);
    }

    #[test]
    fn deterministic_given_seed() {
        let s = [0.91, 0.85, 0.97, 0.62, 0.88, 0.93];
        assert_eq!(
            bootstrap_ci(&s, 2000, 0.95, 5).unwrap(),
            bootstrap_ci(&s, 2000, 0.95, 5).unwrap()
        );
        assert_ne!(
            bootstrap_ci(&s, 2000, 0.95, 5).unwrap(),
            bootstrap_ci(&s, 2000, 0.95, 6).unwrap()
        );
    }

    #[test]
    fn rejects_bad_arguments() {
        assert_eq!(
            bootstrap_ci(&[], 10, 0.95, 0).unwrap_err(),
            CiesError::EmptySample
        );
        assert!(bootstrap_ci(&[1.0], 0, 0.95, 0).is_err());
        assert!(bootstrap_ci(&[1.0], 10, 1.0, 0).is_err());
    }

    #[test]
    fn coverage_of_normal_mean() {
        let dist = Normal::new(0.8, 0.05).unwrap();
        let mut covered = 0;
        for run in 0..200u64 {
            let mut rng = rng::substream(&[1234, run]);
            let sample: Vec<f64> = (0..100).map(|_| dist.sample(&mut rng)).collect();
            let ci = bootstrap_ci(&sample, 1000, 0.95, run).unwrap();
            assert!(ci.lower <= ci.upper);
            if ci.lower <= 0.8 && 0.8 <= ci.upper {
                covered += 1;
            }
        }
        assert!(covered as f64 / 200.0 >= 0.88, "coverage {covered}/200");
    }
}
