//! Multiplicative Gaussian noise neighborhoods.
//!
//! A numerical feature `j` is perturbed as `x_j + sigma_j * z_j` with
//! `sigma_j = eps * |x_j|`, falling back to `sigma_j = eps` when `x_j == 0`.
//! Categorical features are never touched. The standard-normal draws `z` are
//! keyed by `(seed, neighbor index)` and do not depend on `eps`, so two
//! neighborhoods built from the same seed at different noise levels differ
//! only by the scale of the offsets.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, CiesError, Result};
use crate::rng;

/// A point in model-input space together with which coordinates are numerical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    values: Vec<f64>,
    numeric_mask: Vec<bool>,
}

impl Instance {
    pub fn new(values: Vec<f64>, numeric_mask: Vec<bool>) -> Result<Self> {
        check_len(values.len(), numeric_mask.len())?;
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(CiesError::NonFinite(pos));
        }
        Ok(Instance {
            values,
            numeric_mask,
        })
    }

    /// An instance whose every coordinate is numerical.
    pub fn numeric(values: Vec<f64>) -> Result<Self> {
        let mask = vec![true; values.len()];
        Self::new(values, mask)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn numeric_mask(&self) -> &[bool] {
        &self.numeric_mask
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn l2_distance(&self, other: &Instance) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborSet {
    pub origin: Instance,
    pub epsilon: f64,
    pub neighbors: Vec<Instance>,
    pub seed: u64,
}

impl NeighborSet {
    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }
}

/// Applies one noise draw to `x`.
pub fn perturb_instance(x: &Instance, epsilon: f64, base_noise: &[f64]) -> Result<Instance> {
    check_len(x.len(), base_noise.len())?;
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(CiesError::invalid(format!(
            "noise level {epsilon} must be >= 0"
        )));
    }
    let values = x
        .values
        .iter()
        .zip(&x.numeric_mask)
        .zip(base_noise)
        .map(|((&v, &numeric), &z)| {
            if !numeric {
                return v;
            }
            let sigma = if v != 0.0 { epsilon * v.abs() } else { epsilon };
            v + sigma * z
        })
        .collect();
    Ok(Instance {
        values,
        numeric_mask: x.numeric_mask.clone(),
    })
}

/// Standard-normal draws for neighbor `index` of the stream `seed`.
pub fn base_draws(seed: u64, index: usize, m: usize) -> Vec<f64> {
    let mut rng = rng::substream(&[seed, rng::tag::NEIGHBOR, index as u64]);
    (0..m).map(|_| StandardNormal.sample(&mut rng)).collect()
}

/// Builds `k` neighbors of `x`. Neighbor `i` depends only on
/// `(x, epsilon, seed, i)`.
pub fn neighborhood(x: &Instance, k: usize, epsilon: f64, seed: u64) -> Result<NeighborSet> {
    if k == 0 {
        return Err(CiesError::invalid("neighborhood size must be at least 1"));
    }
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(CiesError::invalid(format!(
            "noise level {epsilon} must be >= 0"
        )));
    }
    let neighbors = (0..k)
        .map(|i| perturb_instance(x, epsilon, &base_draws(seed, i, x.len())))
        .collect::<Result<Vec<_>>>()?;
    Ok(NeighborSet {
        origin: x.clone(),
        epsilon,
        neighbors,
        seed,
    })
}

/// Mean Euclidean distance between the origin and its neighbors.
pub fn mean_perturbation_magnitude(ns: &NeighborSet) -> f64 {
    if ns.neighbors.is_empty() {
        return 0.0;
    }
    ns.neighbors
        .iter()
        .map(|n| ns.origin.l2_distance(n))
        .sum::<f64>()
        / ns.neighbors.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn mixed() -> Instance {
        Instance::new(vec![2.0, 0.0, -1.5, 3.0], vec![true, true, true, false]).unwrap()
    }

    #[test]
    fn zero_noise_is_identity() {
        let x = mixed();
        assert_eq!(
            perturb_instance(&x, 0.0, &[1.0, -2.0, 0.3, 9.0]).unwrap(),
            x
        );
        let ns = neighborhood(&x, 7, 0.0, 11).unwrap();
        assert!(ns.neighbors.iter().all(|n| *n == x));
        assert_eq!(mean_perturbation_magnitude(&ns), 0.0);
    }

    #[test]
    fn zero_value_uses_epsilon_as_sigma() {
        let x = Instance::numeric(vec![0.0]).unwrap();
        let p = perturb_instance(&x, 0.05, &[1.0]).unwrap();
        assert_abs_diff_eq!(p.values()[0], 0.05, epsilon = 1e-15);
    }

    #[test]
    fn proportional_sigma() {
        let x = Instance::numeric(vec![-4.0]).unwrap();
        let p = perturb_instance(&x, 0.1, &[2.0]).unwrap();
        assert_abs_diff_eq!(p.values()[0], -4.0 + 0.8, epsilon = 1e-15);
    }

    #[test]
    fn categorical_untouched() {
        let x = mixed();
        let ns = neighborhood(&x, 50, 0.5, 3).unwrap();
        for n in &ns.neighbors {
            assert_eq!(n.values()[3], 3.0);
            assert_eq!(n.numeric_mask(), x.numeric_mask());
        }
    }

    #[test]
    fn parameters_are_validated() {
        let x = mixed();
        assert!(neighborhood(&x, 0, 0.1, 1).is_err());
        assert!(neighborhood(&x, 3, -0.1, 1).is_err());
        assert!(perturb_instance(&x, 0.1, &[0.0]).is_err());
    }

    #[test]
    fn deterministic_and_order_free() {
        let x = mixed();
        let a = neighborhood(&x, 20, 0.03, 99).unwrap();
        let b = neighborhood(&x, 20, 0.03, 99).unwrap();
        assert_eq!(a, b);
        // neighbor 5 of a 20-set equals neighbor 5 of a 6-set
        let c = neighborhood(&x, 6, 0.03, 99).unwrap();
        assert_eq!(a.neighbors[5], c.neighbors[5]);
        let d = neighborhood(&x, 20, 0.03, 100).unwrap();
        assert_ne!(a, d);
    }

    #[test]
    fn euclidean_offset_example() {
        let x = Instance::numeric(vec![1.0, 1.0]).unwrap();
        let ns = NeighborSet {
            origin: x,
            epsilon: 1.0,
            neighbors: vec![Instance::numeric(vec![4.0, 5.0]).unwrap()],
            seed: 0,
        };
        assert_abs_diff_eq!(mean_perturbation_magnitude(&ns), 5.0, epsilon = 1e-15);
    }

    #[test]
    fn magnitude_scales_linearly_with_epsilon() {
        let x = mixed();
        let unit = mean_perturbation_magnitude(&neighborhood(&x, 20, 1.0, 5).unwrap());
        for eps in [0.01, 0.03, 0.05, 0.1, 2.0] {
            let m = mean_perturbation_magnitude(&neighborhood(&x, 20, eps, 5).unwrap());
            assert!((m - eps * unit).abs() <= 1e-12, "eps={eps}");
        }
        let one = mean_perturbation_magnitude(&neighborhood(&x, 20, 0.05, 5).unwrap());
        let two = mean_perturbation_magnitude(&neighborhood(&x, 20, 0.10, 5).unwrap());
        assert!((two - 2.0 * one).abs() <= 1e-12);
    }

    #[test]
    fn noise_std_matches_sigma() {
        let x = Instance::numeric(vec![2.5]).unwrap();
        let eps = 0.03;
        let ns = neighborhood(&x, 20_000, eps, 42).unwrap();
        let d: Vec<f64> = ns.neighbors.iter().map(|n| n.values()[0] - 2.5).collect();
        let mean = d.iter().sum::<f64>() / d.len() as f64;
        let var = d.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (d.len() - 1) as f64;
        let target = eps * 2.5;
        assert!((var.sqrt() - target).abs() / target < 0.03);
    }
}
