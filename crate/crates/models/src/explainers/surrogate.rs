use cies_core::{rng, AttributionVector};
use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{check_dims, Explainer};
use crate::error::{ModelError, Result};
use crate::predictor::Predictor;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurrogateParams {
    pub n_samples: usize,
    /// Kernel width on the standardized distance; `None` means `0.75 * sqrt(M)`.
    pub kernel_width: Option<f64>,
    pub ridge: f64,
}

impl Default for SurrogateParams {
    fn default() -> Self {
        SurrogateParams {
            n_samples: 500,
            kernel_width: None,
            ridge: 1e-6,
        }
    }
}

/// Local weighted linear fit to the model's probabilities around `x`.
///
/// Samples are `x + scale * z` with `z` standard normal; a sample's weight is
/// `exp(-|z|^2 / width^2)`. The fitted slope of feature `j` is turned into an
/// attribution by multiplying with `x_j - reference_j`.
///
/// Every call reuses the same `z` draws, so nearby inputs are explained with
/// common random numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSurrogate {
    params: SurrogateParams,
    scales: Vec<f64>,
    reference: Vec<f64>,
    draws: Vec<Vec<f64>>,
    kernel: Vec<f64>,
}

impl LinearSurrogate {
    pub fn new(
        params: SurrogateParams,
        scales: Vec<f64>,
        reference: Vec<f64>,
        seed: u64,
    ) -> Result<Self> {
        let m = scales.len();
        if reference.len() != m {
            return Err(ModelError::Dimension {
                expected: m,
                found: reference.len(),
            });
        }
        if params.n_samples < m + 2 {
            return Err(ModelError::InvalidParameter(format!(
                "surrogate needs at least M + 2 = {} samples, got {}",
                m + 2,
                params.n_samples
            )));
        }
        if scales.iter().any(|&s| !(s >= 0.0 && s.is_finite())) {
            return Err(ModelError::InvalidParameter(
                "feature scales must be finite and >= 0".into(),
            ));
        }
        let width = params.kernel_width.unwrap_or(0.75 * (m as f64).sqrt());
        if !(width > 0.0) || !(params.ridge >= 0.0) {
            return Err(ModelError::InvalidParameter(
                "kernel width must be > 0 and ridge >= 0".into(),
            ));
        }
        let mut rng = rng::substream(&[seed, rng::tag::SURROGATE]);
        let draws: Vec<Vec<f64>> = (0..params.n_samples)
            .map(|_| {
                (0..m)
                    .map(|j| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        if scales[j] > 0.0 {
                            z
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect();
        let kernel = draws
            .iter()
            .map(|z| (-z.iter().map(|v| v * v).sum::<f64>() / (width * width)).exp())
            .collect();
        Ok(LinearSurrogate {
            params,
            scales,
            reference,
            draws,
            kernel,
        })
    }

    /// Weighted least squares with an unpenalized intercept. Returns the
    /// slopes with respect to the standardized offsets `z`.
    fn fit(&self, targets: &[f64]) -> Vec<f64> {
        let m = self.scales.len();
        let p = m + 1;
        let mut a = DMatrix::<f64>::zeros(p, p);
        let mut rhs = DVector::<f64>::zeros(p);
        let mut row = vec![0.0; p];
        for ((z, &w), &y) in self.draws.iter().zip(&self.kernel).zip(targets) {
            row[0] = 1.0;
            row[1..].copy_from_slice(z);
            for i in 0..p {
                rhs[i] += w * row[i] * y;
                for k in 0..p {
                    a[(i, k)] += w * row[i] * row[k];
                }
            }
        }
        for i in 1..p {
            a[(i, i)] += self.params.ridge;
        }
        let solution = match a.clone().cholesky() {
            Some(c) => c.solve(&rhs),
            None => a
                .svd(true, true)
                .solve(&rhs, 1e-12)
                .unwrap_or_else(|_| DVector::zeros(p)),
        };
        solution.iter().skip(1).copied().collect()
    }
}

impl Explainer for LinearSurrogate {
    fn name(&self) -> &'static str {
        "linear_surrogate"
    }

    fn explain(&self, model: &dyn Predictor, x: &[f64]) -> Result<AttributionVector> {
        let m = self.scales.len();
        check_dims(model, x, m)?;
        let mut sample = vec![0.0; m];
        let targets: Vec<f64> = self
            .draws
            .iter()
            .map(|z| {
                for j in 0..m {
                    sample[j] = x[j] + self.scales[j] * z[j];
                }
                model.predict_proba(&sample)
            })
            .collect();
        let slopes = self.fit(&targets);
        let phi = (0..m)
            .map(|j| {
                if self.scales[j] > 0.0 {
                    slopes[j] / self.scales[j] * (x[j] - self.reference[j])
                } else {
                    0.0
                }
            })
            .collect();
        Ok(AttributionVector::from_values(phi)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predictor::LinearModel;

    #[test]
    fn recovers_linear_slopes() {
        let model = LinearModel {
            weights: vec![0.3, -0.2, 0.0],
            intercept: 0.1,
        };
        let s = LinearSurrogate::new(
            SurrogateParams::default(),
            vec![1.0, 2.0, 0.5],
            vec![0.0; 3],
            1,
        )
        .unwrap();
        let phi = s.explain(&model, &[1.0, 1.0, 1.0]).unwrap();
        // phi_j = beta_j * (x_j - 0); ridge shrinks by ~1e-6 relative
        for (p, want) in phi.values().iter().zip([0.3, -0.2, 0.0]) {
            assert!((p - want).abs() < 1e-6, "{p} vs {want}");
        }
    }

    #[test]
    fn needs_enough_samples() {
        let p = SurrogateParams {
            n_samples: 4,
            ..Default::default()
        };
        assert!(LinearSurrogate::new(p, vec![1.0; 3], vec![0.0; 3], 0).is_err());
    }
}
