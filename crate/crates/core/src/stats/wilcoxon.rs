use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::correlation::average_ranks;
use crate::error::{check_len, CiesError, Result};

/// Largest effective sample size that uses the exact null distribution.
pub const EXACT_MAX_N: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestMethod {
    Exact,
    NormalApprox,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// Smaller of the positive and negative signed-rank sums.
    pub statistic: f64,
    /// Two-sided p-value.
    pub p_value: f64,
    pub n_effective: usize,
    pub method: TestMethod,
}

/// Paired two-sided Wilcoxon signed-rank test of `a` against `b`.
///
/// Zero differences are dropped before ranking; tied magnitudes get average
/// ranks. Up to [`EXACT_MAX_N`] remaining pairs the p-value comes from the
/// exact distribution of the positive rank sum over all `2^n` sign
/// assignments, computed by dynamic programming over doubled ranks. Beyond
/// that a normal approximation with continuity and tie corrections is used.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<WilcoxonResult> {
    check_len(a.len(), b.len())?;
    if a.is_empty() {
        return Err(CiesError::EmptySample);
    }
    let diffs: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| x - y)
        .filter(|d| *d != 0.0)
        .collect();
    if diffs.is_empty() {
        return Err(CiesError::DegenerateTest);
    }
    let n = diffs.len();
    let magnitudes: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = average_ranks(&magnitudes);
    let t_plus: f64 = diffs
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| r)
        .sum();
    let total = (n * (n + 1)) as f64 / 2.0;
    let statistic = t_plus.min(total - t_plus);

    let (p_value, method) = if n <= EXACT_MAX_N {
        (exact_p(&ranks, t_plus), TestMethod::Exact)
    } else {
        (normal_p(&ranks, t_plus), TestMethod::NormalApprox)
    };
    Ok(WilcoxonResult {
        statistic,
        p_value: p_value.clamp(0.0, 1.0),
        n_effective: n,
        method,
    })
}

fn exact_p(ranks: &[f64], t_plus: f64) -> f64 {
    // Average ranks are multiples of 1/2, so doubling makes them integral.
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let max_sum: usize = doubled.iter().sum();
    let mut counts = vec![0.0f64; max_sum + 1];
    counts[0] = 1.0;
    let mut reach = 0;
    for &r in &doubled {
        for s in (0..=reach).rev() {
            let c = counts[s];
            if c != 0.0 {
                counts[s + r] += c;
            }
        }
        reach += r;
    }
    let observed = (2.0 * t_plus).round() as usize;
    let all: f64 = counts.iter().sum();
    let lower: f64 = counts[..=observed].iter().sum();
    let upper: f64 = counts[observed..].iter().sum();
    (2.0 * lower.min(upper) / all).min(1.0)
}

fn normal_p(ranks: &[f64], t_plus: f64) -> f64 {
    let n = ranks.len() as f64;
    let mean = n * (n + 1.0) / 4.0;
    let mut sorted = ranks.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    if var <= 0.0 {
        return 1.0;
    }
    let z = ((t_plus - mean).abs() - 0.5).max(0.0) / var.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    2.0 * (1.0 - normal.cdf(z))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    // Brute-force reference: enumerate every sign assignment.
    fn enumerate_p(diffs: &[f64]) -> f64 {
        let nz: Vec<f64> = diffs.iter().copied().filter(|d| *d != 0.0).collect();
        let ranks = average_ranks(&nz.iter().map(|d| d.abs()).collect::<Vec<_>>());
        let obs: f64 = nz
            .iter()
            .zip(&ranks)
            .filter(|(d, _)| **d > 0.0)
            .map(|(_, r)| r)
            .sum();
        let n = nz.len();
        let (mut le, mut ge) = (0u64, 0u64);
        for mask in 0u64..(1 << n) {
            let t: f64 = (0..n)
                .filter(|i| mask >> i & 1 == 1)
                .map(|i| ranks[i])
                .sum();
            if t <= obs + 1e-9 {
                le += 1;
            }
            if t >= obs - 1e-9 {
                ge += 1;
            }
        }
        (2.0 * le.min(ge) as f64 / (1u64 << n) as f64).min(1.0)
    }

    #[test]
    fn six_positive_differences() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let r = wilcoxon_signed_rank(&a, &[0.0; 6]).unwrap();
        assert_abs_diff_eq!(r.p_value, 0.03125, epsilon = 1e-12);
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.method, TestMethod::Exact);
        assert_eq!(r.n_effective, 6);
    }

    #[test]
    fn symmetric_pair_has_p_one() {
        let r = wilcoxon_signed_rank(&[1.0, -1.0], &[0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(r.p_value, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn identical_samples_are_degenerate() {
        assert_eq!(
            wilcoxon_signed_rank(&[0.3, 0.5], &[0.3, 0.5]).unwrap_err(),
            CiesError::DegenerateTest
        );
        assert!(wilcoxon_signed_rank(&[], &[]).is_err());
        assert!(wilcoxon_signed_rank(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn zeros_are_dropped() {
        let r = wilcoxon_signed_rank(&[1.0, 2.0, 0.0], &[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(r.n_effective, 2);
    }

    #[test]
    fn large_samples_use_normal_approximation() {
        let a: Vec<f64> = (0..100).map(|i| 0.9 + 0.001 * (i % 7) as f64).collect();
        let b: Vec<f64> = (0..100).map(|i| 0.85 + 0.002 * (i % 5) as f64).collect();
        let r = wilcoxon_signed_rank(&a, &b).unwrap();
        assert_eq!(r.method, TestMethod::NormalApprox);
        assert!(r.p_value < 1e-9);
    }

    #[test]
    fn normal_approximation_is_close_to_exact_near_the_threshold() {
        let d: Vec<f64> = (1..=25)
            .map(|i| if i % 3 == 0 { -(i as f64) } else { i as f64 })
            .collect();
        let zeros = vec![0.0; d.len()];
        let exact = wilcoxon_signed_rank(&d, &zeros).unwrap().p_value;
        let ranks = average_ranks(&d.iter().map(|v| v.abs()).collect::<Vec<_>>());
        let t_plus: f64 = d
            .iter()
            .zip(&ranks)
            .filter(|(v, _)| **v > 0.0)
            .map(|(_, r)| r)
            .sum();
        let approx = normal_p(&ranks, t_plus);
        assert!((exact - approx).abs() < 0.01, "{exact} vs {approx}");
    }

    proptest! {
        #[test]
        fn exact_matches_enumeration(d in prop::collection::vec(-4i32..=4, 1..=10)) {
            let diffs: Vec<f64> = d.iter().map(|&v| v as f64 * 0.5).collect();
            let zeros = vec![0.0; diffs.len()];
            match wilcoxon_signed_rank(&diffs, &zeros) {
                Ok(r) => prop_assert!((r.p_value - enumerate_p(&diffs)).abs() < 1e-12),
                Err(e) => prop_assert_eq!(e, CiesError::DegenerateTest),
            }
        }

        #[test]
        fn swapping_samples_keeps_p(pairs in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..60)) {
            let a: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let b: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            if let (Ok(x), Ok(y)) = (wilcoxon_signed_rank(&a, &b), wilcoxon_signed_rank(&b, &a)) {
                prop_assert!((x.p_value - y.p_value).abs() < 1e-12);
                prop_assert!((0.0..=1.0).contains(&x.p_value));
            }
        }
    }
}
