use cies_core::rng;
use rand::seq::SliceRandom;

use crate::error::{ModelError, Result};

/// Stratified train/test partition of row indices.
///
/// Each class sends `round(test_fraction * n_class)` of its rows to the test
/// side. Both index lists come back sorted.
pub fn stratified_split(
    labels: &[u8],
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(ModelError::InvalidParameter(format!(
            "test fraction {test_fraction} outside (0, 1)"
        )));
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in [0u8, 1] {
        let mut idx: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter(|(_, &y)| y == class)
            .map(|(i, _)| i)
            .collect();
        if idx.is_empty() {
            return Err(ModelError::Stratification(class));
        }
        let mut rng = rng::substream(&[seed, rng::tag::SPLIT, class as u64]);
        idx.shuffle(&mut rng);
        let n_test = (test_fraction * idx.len() as f64).round() as usize;
        test.extend_from_slice(&idx[..n_test]);
        train.extend_from_slice(&idx[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}
