use serde::{Deserialize, Serialize};

use crate::attribution::AttributionVector;
use crate::error::{check_len, CiesError, Result};
use crate::perturbation::NeighborSet;
use crate::weighting::WeightVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LipschitzMode {
    Max,
    Mean,
}

/// Empirical local Lipschitz constant of the explainer over a neighborhood:
/// the max (or mean) of `||phi(x) - phi(x'_k)||_2 / ||x - x'_k||_2`.
/// Neighbors that coincide with the origin are skipped.
pub fn lipschitz_estimate(
    ns: &NeighborSet,
    phi: &AttributionVector,
    neighbor_phis: &[AttributionVector],
    mode: LipschitzMode,
) -> Result<f64> {
    check_len(ns.neighbors.len(), neighbor_phis.len())?;
    let mut ratios = Vec::with_capacity(neighbor_phis.len());
    for (x_k, phi_k) in ns.neighbors.iter().zip(neighbor_phis) {
        let dx = ns.origin.l2_distance(x_k);
        if dx == 0.0 {
            continue;
        }
        ratios.push(phi.l2_distance(phi_k)? / dx);
    }
    if ratios.is_empty() {
        return Err(CiesError::UndefinedEstimate);
    }
    Ok(match mode {
        LipschitzMode::Max => ratios.iter().copied().fold(0.0, f64::max),
        LipschitzMode::Mean => ratios.iter().sum::<f64>() / ratios.len() as f64,
    })
}

/// Maps a Lipschitz constant onto `(0, 1]`: `1 / (1 + L)`.
pub fn lipschitz_score(l: f64) -> Result<f64> {
    if !(l >= 0.0) {
        return Err(CiesError::invalid(format!(
            "Lipschitz constant {l} must be >= 0"
        )));
    }
    Ok(1.0 / (1.0 + l))
}

/// Lower bound on the stability score implied by a Lipschitz constant:
/// `max(0, 1 - L * ||w||_2 * mean_delta / ||phi||_w)`.
pub fn lipschitz_lower_bound(
    l: f64,
    w: &WeightVector,
    delta_bar: f64,
    phi_mag_w: f64,
) -> Result<f64> {
    if !(phi_mag_w > 0.0) {
        return Err(CiesError::DegenerateExplanation);
    }
    if !(l >= 0.0 && delta_bar >= 0.0) {
        return Err(CiesError::invalid(
            "Lipschitz constant and perturbation size must be >= 0",
        ));
    }
    Ok((1.0 - l * w.l2_norm() * delta_bar / phi_mag_w).max(0.0))
}

/// `1 - mean_k |p0 - p_k|`
pub fn prediction_stability(p0: f64, neighbor_preds: &[f64]) -> Result<f64> {
    if neighbor_preds.is_empty() {
        return Err(CiesError::EmptySample);
    }
    let in_range = |p: f64| (0.0..=1.0).contains(&p);
    if !in_range(p0) || !neighbor_preds.iter().all(|&p| in_range(p)) {
        return Err(CiesError::invalid("predictions must lie in [0, 1]"));
    }
    let mean_change =
        neighbor_preds.iter().map(|p| (p0 - p).abs()).sum::<f64>() / neighbor_preds.len() as f64;
    Ok((1.0 - mean_change).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perturbation::Instance;
    use approx::assert_abs_diff_eq;

    fn av(v: &[f64]) -> AttributionVector {
        AttributionVector::from_values(v.to_vec()).unwrap()
    }

    fn ns(origin: &[f64], neighbors: &[&[f64]]) -> NeighborSet {
        NeighborSet {
            origin: Instance::numeric(origin.to_vec()).unwrap(),
            epsilon: 0.1,
            neighbors: neighbors
                .iter()
                .map(|n| Instance::numeric(n.to_vec()).unwrap())
                .collect(),
            seed: 0,
        }
    }

    #[test]
    fn constant_explanations_give_zero() {
        let set = ns(&[1.0, 1.0], &[&[1.1, 1.0], &[1.0, 0.8]]);
        let phi = av(&[0.3, 0.2]);
        let l = lipschitz_estimate(&set, &phi, &[phi.clone(), phi.clone()], LipschitzMode::Max)
            .unwrap();
        assert_eq!(l, 0.0);
    }

    #[test]
    fn single_ratio() {
        let set = ns(&[0.0, 0.0], &[&[0.06, 0.08]]);
        let l = lipschitz_estimate(
            &set,
            &av(&[0.0, 0.0]),
            &[av(&[0.03, 0.04])],
            LipschitzMode::Max,
        )
        .unwrap();
        assert_abs_diff_eq!(l, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn max_dominates_mean_and_zero_offsets_are_skipped() {
        let set = ns(&[1.0], &[&[1.0], &[1.5], &[2.0]]);
        let phi = av(&[0.0]);
        let others = [av(&[9.0]), av(&[0.2]), av(&[0.1])];
        let max = lipschitz_estimate(&set, &phi, &others, LipschitzMode::Max).unwrap();
        let mean = lipschitz_estimate(&set, &phi, &others, LipschitzMode::Mean).unwrap();
        assert_abs_diff_eq!(max, 0.4, epsilon = 1e-12);
        assert_abs_diff_eq!(mean, 0.25, epsilon = 1e-12);
        assert!(max >= mean);
    }

    #[test]
    fn all_identical_neighbors_are_undefined() {
        let set = ns(&[1.0], &[&[1.0]]);
        assert_eq!(
            lipschitz_estimate(&set, &av(&[1.0]), &[av(&[1.0])], LipschitzMode::Max).unwrap_err(),
            CiesError::UndefinedEstimate
        );
    }

    #[test]
    fn score_examples() {
        assert_eq!(lipschitz_score(0.0).unwrap(), 1.0);
        assert_eq!(lipschitz_score(1.0).unwrap(), 0.5);
        assert!(lipschitz_score(10.0).unwrap() < lipschitz_score(1.0).unwrap());
        assert!(lipschitz_score(-0.1).is_err());
    }

    #[test]
    fn bound_examples() {
        let w = WeightVector::new(vec![2.0 / 3.0, 1.0 / 3.0]).unwrap();
        assert_eq!(lipschitz_lower_bound(0.0, &w, 0.1, 0.8333).unwrap(), 1.0);
        assert_eq!(lipschitz_lower_bound(100.0, &w, 0.1, 0.8333).unwrap(), 0.0);
        // 1 - (sqrt(5)/3) * 0.1 / 0.8333
        assert_abs_diff_eq!(
            lipschitz_lower_bound(1.0, &w, 0.1, 0.8333).unwrap(),
            0.91055,
            epsilon = 1e-4
        );
        assert_eq!(
            lipschitz_lower_bound(1.0, &w, 0.1, 0.0).unwrap_err(),
            CiesError::DegenerateExplanation
        );
    }

    #[test]
    fn prediction_stability_examples() {
        assert_eq!(prediction_stability(0.4, &[0.4, 0.4]).unwrap(), 1.0);
        assert_abs_diff_eq!(
            prediction_stability(0.8, &[0.7, 0.9]).unwrap(),
            0.9,
            epsilon = 1e-12
        );
        assert_eq!(prediction_stability(1.0, &[0.0]).unwrap(), 0.0);
        assert!(prediction_stability(1.2, &[0.0]).is_err());
        assert!(prediction_stability(0.5, &[]).is_err());
    }
}
