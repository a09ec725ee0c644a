//! Descriptive aggregation of instance-level scores.

use serde::{Deserialize, Serialize};

use crate::error::{CiesError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreSummary {
    pub n: usize,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub min: f64,
    pub p25: f64,
    pub median: f64,
    pub p75: f64,
    pub max: f64,
}

/// Quantile of an ascending-sorted slice, interpolating linearly between
/// order statistics at position `q * (n - 1)`.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (sorted[hi] - sorted[lo]) * frac
    }
}

pub fn mean(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(CiesError::EmptySample);
    }
    let n = values.len() as f64;
    let rough = values.iter().sum::<f64>() / n;
    // one refinement pass removes most of the summation rounding
    Ok(rough + values.iter().map(|v| v - rough).sum::<f64>() / n)
}

pub fn population_std(values: &[f64]) -> Result<f64> {
    let m = mean(values)?;
    let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64;
    Ok(var.sqrt())
}

pub fn aggregate_scores(scores: &[f64]) -> Result<ScoreSummary> {
    if scores.is_empty() {
        return Err(CiesError::EmptySample);
    }
    if let Some(pos) = scores.iter().position(|v| !v.is_finite()) {
        return Err(CiesError::NonFinite(pos));
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(ScoreSummary {
        n: scores.len(),
        mean: mean(scores)?,
        std: population_std(scores)?,
        min: sorted[0],
        p25: quantile_sorted(&sorted, 0.25),
        median: quantile_sorted(&sorted, 0.5),
        p75: quantile_sorted(&sorted, 0.75),
        max: sorted[sorted.len() - 1],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn five_point_example() {
        let s = aggregate_scores(&[1.0, 0.4, 0.2, 0.8, 0.6]).unwrap();
        assert_abs_diff_eq!(s.mean, 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(s.median, 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(s.p25, 0.4, epsilon = 1e-12);
        assert_abs_diff_eq!(s.p75, 0.8, epsilon = 1e-12);
        assert_eq!((s.min, s.max, s.n), (0.2, 1.0, 5));
        // population variance of {0.2,..,1.0} is 0.08
        assert_abs_diff_eq!(s.std, 0.08f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn constant_and_single() {
        let s = aggregate_scores(&[0.3, 0.3, 0.3]).unwrap();
        assert_eq!(
            (s.mean, s.std, s.min, s.p25, s.median, s.p75, s.max),
            (0.3, 0.0, 0.3, 0.3, 0.3, 0.3, 0.3)
        );
        let s = aggregate_scores(&[0.9]).unwrap();
        assert_eq!((s.mean, s.std, s.median), (0.9, 0.0, 0.9));
    }

    #[test]
    fn interpolates_between_order_statistics() {
        assert_abs_diff_eq!(quantile_sorted(&[0.0, 1.0], 0.25), 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(
            quantile_sorted(&[1.0, 2.0, 4.0, 8.0], 0.5),
            3.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn empty_is_an_error() {
        assert_eq!(aggregate_scores(&[]).unwrap_err(), CiesError::EmptySample);
    }
}
