/// A trained binary classifier that returns the positive-class probability.
pub trait Predictor: Send + Sync + std::fmt::Debug {
    fn name(&self) -> &str;

    fn n_features(&self) -> usize;

    fn predict_proba(&self, x: &[f64]) -> f64;

    fn predict_many(&self, rows: &[Vec<f64>]) -> Vec<f64> {
        rows.iter().map(|r| self.predict_proba(r)).collect()
    }

    /// Fills `out[s]` with the output on the hybrid row that takes feature `j`
    /// from `x` when bit `j` of `s` is set and from `background` otherwise.
    /// `out` has length `2^M`.
    fn coalition_outputs(&self, x: &[f64], background: &[f64], out: &mut [f64]) {
        let m = x.len();
        debug_assert_eq!(out.len(), 1 << m);
        let mut z = background.to_vec();
        for (s, slot) in out.iter_mut().enumerate() {
            for j in 0..m {
                z[j] = if s >> j & 1 == 1 { x[j] } else { background[j] };
            }
            *slot = self.predict_proba(&z);
        }
    }
}

/// Logistic model `sigmoid(b + w.x)`; handy as a smooth reference predictor.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
}

pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

impl Predictor for LogisticModel {
    fn name(&self) -> &str {
        "logistic"
    }

    fn n_features(&self) -> usize {
        self.weights.len()
    }

    fn predict_proba(&self, x: &[f64]) -> f64 {
        sigmoid(self.intercept + self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>())
    }
}

/// Unclamped linear score; its Shapley values are closed-form.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
}

impl Predictor for LinearModel {
    fn name(&self) -> &str {
        "linear"
    }

    fn n_features(&self) -> usize {
        self.weights.len()
    }

    fn predict_proba(&self, x: &[f64]) -> f64 {
        self.intercept + self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
    }
}
