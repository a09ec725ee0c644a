//! Attribution vectors, importance ranking and the stability scores built on
//! top of them.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, CiesError, Result};
use crate::weighting::{resolve_weights, RankWeighting, WeightVector};

/// Per-feature attributions for a single prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionVector {
    values: Vec<f64>,
    feature_ids: Vec<String>,
}

impl AttributionVector {
    pub fn new(values: Vec<f64>, feature_ids: Vec<String>) -> Result<Self> {
        if values.is_empty() {
            return Err(CiesError::invalid(
                "attribution vector needs at least one feature",
            ));
        }
        check_len(values.len(), feature_ids.len())?;
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(CiesError::NonFinite(pos));
        }
        Ok(AttributionVector {
            values,
            feature_ids,
        })
    }

    /// Builds a vector with positional ids `f0, f1, ...`.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        let ids = (0..values.len()).map(|j| format!("f{j}")).collect();
        Self::new(values, ids)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn feature_ids(&self) -> &[String] {
        &self.feature_ids
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Sum of absolute attributions.
    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum()
    }

    /// Euclidean distance to another attribution vector.
    pub fn l2_distance(&self, other: &AttributionVector) -> Result<f64> {
        check_len(self.len(), other.len())?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt())
    }
}

/// Importance ranks: entry `j` is the rank of feature `j`, 1 = largest |phi|.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankVector(Vec<usize>);

impl RankVector {
    /// Validates that `ranks` is a permutation of `1..=M`.
    pub fn from_ranks(ranks: Vec<usize>) -> Result<Self> {
        let m = ranks.len();
        let mut seen = vec![false; m];
        for &r in &ranks {
            if r == 0 || r > m || seen[r - 1] {
                return Err(CiesError::invalid(format!(
                    "ranks must be a permutation of 1..={m}"
                )));
            }
            seen[r - 1] = true;
        }
        Ok(RankVector(ranks))
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Feature indices whose rank is at most `k`, in rank order.
    pub fn top(&self, k: usize) -> Vec<usize> {
        let mut order = vec![0; self.0.len()];
        for (j, &r) in self.0.iter().enumerate() {
            order[r - 1] = j;
        }
        order.truncate(k);
        order
    }
}

/// Ranks features by descending |phi_j|; equal magnitudes go to the lower
/// feature index first.
pub fn rank_features(phi: &AttributionVector) -> RankVector {
    let mut order: Vec<usize> = (0..phi.len()).collect();
    order.sort_by(|&a, &b| {
        phi.values[b]
            .abs()
            .total_cmp(&phi.values[a].abs())
            .then(a.cmp(&b))
    });
    let mut ranks = vec![0; phi.len()];
    for (pos, &j) in order.iter().enumerate() {
        ranks[j] = pos + 1;
    }
    RankVector(ranks)
}

/// `sum_j w_j * |phi_j - phi'_j|`
pub fn rank_weighted_distance(
    phi: &AttributionVector,
    phi_k: &AttributionVector,
    w: &WeightVector,
) -> Result<f64> {
    check_len(phi.len(), phi_k.len())?;
    check_len(phi.len(), w.len())?;
    Ok(phi
        .values
        .iter()
        .zip(&phi_k.values)
        .zip(w.as_slice())
        .map(|((a, b), w)| w * (a - b).abs())
        .sum())
}

/// `sum_j (1/M) * |phi_j - phi'_j|`
pub fn uniform_distance(phi: &AttributionVector, phi_k: &AttributionVector) -> Result<f64> {
    check_len(phi.len(), phi_k.len())?;
    let m = phi.len() as f64;
    Ok(phi
        .values
        .iter()
        .zip(&phi_k.values)
        .map(|(a, b)| (a - b).abs() / m)
        .sum())
}

/// `sum_j w_j * |phi_j|`
pub fn weighted_magnitude(phi: &AttributionVector, w: &WeightVector) -> Result<f64> {
    check_len(phi.len(), w.len())?;
    Ok(phi
        .values
        .iter()
        .zip(w.as_slice())
        .map(|(v, w)| w * v.abs())
        .sum())
}

fn clamp_ratio_score(distance: f64, magnitude: f64) -> f64 {
    (1.0 - distance / magnitude).max(0.0)
}

/// Intermediate quantities of one stability score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityComponents {
    pub weights: WeightVector,
    /// Mean rank-weighted distance over the neighbors.
    pub mean_distance: f64,
    pub weighted_magnitude: f64,
    pub score: f64,
}

impl StabilityComponents {
    /// Scores `neighbor_phis` against `phi` using weights frozen from `phi`'s
    /// own ranking.
    pub fn compute(
        phi: &AttributionVector,
        neighbor_phis: &[AttributionVector],
        scheme: &dyn RankWeighting,
    ) -> Result<Self> {
        if neighbor_phis.is_empty() {
            return Err(CiesError::EmptySample);
        }
        let weights = resolve_weights(scheme, &rank_features(phi))?;
        let magnitude = weighted_magnitude(phi, &weights)?;
        if !(magnitude > 0.0) {
            return Err(CiesError::DegenerateExplanation);
        }
        let mut total = 0.0;
        for other in neighbor_phis {
            total += rank_weighted_distance(phi, other, &weights)?;
        }
        let mean_distance = total / neighbor_phis.len() as f64;
        Ok(StabilityComponents {
            score: clamp_ratio_score(mean_distance, magnitude),
            weights,
            mean_distance,
            weighted_magnitude: magnitude,
        })
    }
}

/// Rank-weighted stability score in `[0, 1]`.
pub fn cies_score(
    phi: &AttributionVector,
    neighbor_phis: &[AttributionVector],
    scheme: &dyn RankWeighting,
) -> Result<f64> {
    StabilityComponents::compute(phi, neighbor_phis, scheme).map(|c| c.score)
}

/// Uniform-weight comparison score: `max(0, 1 - mean(D_U) * M / sum_j |phi_j|)`.
pub fn baseline_score(phi: &AttributionVector, neighbor_phis: &[AttributionVector]) -> Result<f64> {
    if neighbor_phis.is_empty() {
        return Err(CiesError::EmptySample);
    }
    let total_magnitude = phi.l1_norm();
    if !(total_magnitude > 0.0) {
        return Err(CiesError::DegenerateExplanation);
    }
    let mut total = 0.0;
    for other in neighbor_phis {
        total += uniform_distance(phi, other)?;
    }
    let mean = total / neighbor_phis.len() as f64;
    Ok(clamp_ratio_score(mean * phi.len() as f64, total_magnitude))
}

/// Jaccard overlap of the top-`k` feature sets of two explanations.
pub fn top_k_jaccard(phi: &AttributionVector, phi_k: &AttributionVector, k: usize) -> Result<f64> {
    check_len(phi.len(), phi_k.len())?;
    if k == 0 || k > phi.len() {
        return Err(CiesError::invalid(format!(
            "top-k size {k} outside 1..={}",
            phi.len()
        )));
    }
    let a: BTreeSet<&str> = rank_features(phi)
        .top(k)
        .into_iter()
        .map(|j| phi.feature_ids[j].as_str())
        .collect();
    let b: BTreeSet<&str> = rank_features(phi_k)
        .top(k)
        .into_iter()
        .map(|j| phi_k.feature_ids[j].as_str())
        .collect();
    let inter = a.intersection(&b).count();
    let union = a.union(&b).count();
    Ok(inter as f64 / union as f64)
}
