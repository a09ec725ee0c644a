use cies_core::AttributionVector;
use serde::{Deserialize, Serialize};

use super::{check_dims, Explainer};
use crate::error::{ModelError, Result};
use crate::predictor::Predictor;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShapleyParams {
    /// Largest feature count accepted; the value table has `2^M` entries.
    pub max_features: usize,
}

impl Default for ShapleyParams {
    fn default() -> Self {
        ShapleyParams { max_features: 16 }
    }
}

/// Shapley values by full coalition enumeration, with the interventional
/// value `v(S) = mean_b f(x_S, b_rest)` over a fixed background set.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactShapley {
    background: Vec<Vec<f64>>,
    max_features: usize,
}

impl ExactShapley {
    pub fn new(background: Vec<Vec<f64>>, max_features: usize) -> Result<Self> {
        let Some(first) = background.first() else {
            return Err(ModelError::InvalidParameter(
                "exact Shapley needs a non-empty background".into(),
            ));
        };
        let m = first.len();
        if let Some(row) = background.iter().find(|r| r.len() != m) {
            return Err(ModelError::Dimension {
                expected: m,
                found: row.len(),
            });
        }
        if m > max_features {
            return Err(ModelError::TooManyFeatures {
                features: m,
                cap: max_features,
            });
        }
        Ok(ExactShapley {
            background,
            max_features,
        })
    }

    pub fn background(&self) -> &[Vec<f64>] {
        &self.background
    }

    /// `v[S]` for every coalition bitmask `S`.
    pub fn value_table(&self, model: &dyn Predictor, x: &[f64]) -> Vec<f64> {
        let size = 1usize << x.len();
        let mut total = vec![0.0; size];
        let mut buf = vec![0.0; size];
        for b in &self.background {
            model.coalition_outputs(x, b, &mut buf);
            total.iter_mut().zip(&buf).for_each(|(t, v)| *t += v);
        }
        let n = self.background.len() as f64;
        total.iter_mut().for_each(|t| *t /= n);
        total
    }
}

/// `|S|! (M - |S| - 1)! / M!` indexed by `|S|`.
fn coalition_weights(m: usize) -> Vec<f64> {
    // 1 / (M * C(M-1, s))
    let mut binom = 1.0;
    (0..m)
        .map(|s| {
            if s > 0 {
                binom = binom * (m - s) as f64 / s as f64;
            }
            1.0 / (m as f64 * binom)
        })
        .collect()
}

impl Explainer for ExactShapley {
    fn name(&self) -> &'static str {
        "exact_shapley"
    }

    fn explain(&self, model: &dyn Predictor, x: &[f64]) -> Result<AttributionVector> {
        let m = self.background[0].len();
        check_dims(model, x, m)?;
        if m > self.max_features {
            return Err(ModelError::TooManyFeatures {
                features: m,
                cap: self.max_features,
            });
        }
        let v = self.value_table(model, x);
        let w = coalition_weights(m);
        let mut phi = vec![0.0; m];
        for (j, p) in phi.iter_mut().enumerate() {
            let bit = 1usize << j;
            *p = (0..v.len())
                .filter(|s| s & bit == 0)
                .map(|s| w[s.count_ones() as usize] * (v[s | bit] - v[s]))
                .sum();
        }
        Ok(AttributionVector::from_values(phi)?)
    }
}
