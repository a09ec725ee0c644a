//! Minority oversampling by interpolation between a minority row and one of
//! its nearest minority neighbors. Applied to training rows only.

use cies_core::rng;
use rand::Rng;

use crate::dataset::Dataset;
use crate::error::{ModelError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SmoteOutcome {
    /// Original rows followed by the synthetic ones.
    pub data: Dataset,
    pub n_synthetic: usize,
    pub effective_k: usize,
    pub warning: Option<String>,
    /// For each synthetic row, the (base, neighbor) row indices it was built from.
    pub parents: Vec<(usize, usize)>,
}

/// Balances the two classes. Distances use numerical features only;
/// categorical codes are copied from the base row.
pub fn smote(train: &Dataset, k: usize, seed: u64) -> Result<SmoteOutcome> {
    if k == 0 {
        return Err(ModelError::InvalidParameter("SMOTE needs k >= 1".into()));
    }
    let [n0, n1] = train.class_counts();
    let minority_class = u8::from(n1 < n0);
    let minority: Vec<usize> = (0..train.len())
        .filter(|&i| train.labels[i] == minority_class)
        .collect();
    let needed = n0.abs_diff(n1);
    if needed == 0 {
        return Ok(SmoteOutcome {
            data: train.clone(),
            n_synthetic: 0,
            effective_k: k,
            warning: None,
            parents: Vec::new(),
        });
    }
    if minority.len() < 2 {
        return Err(ModelError::Data(format!(
            "SMOTE needs at least two minority rows, found {}",
            minority.len()
        )));
    }
    let mut warning = None;
    let effective_k = if k > minority.len() - 1 {
        let msg = format!(
            "SMOTE k reduced from {k} to {} (minority class has {} rows)",
            minority.len() - 1,
            minority.len()
        );
        log::warn!("{msg}");
        warning = Some(msg);
        minority.len() - 1
    } else {
        k
    };

    let numeric = train.numeric_mask();
    let dist2 = |a: &[f64], b: &[f64]| -> f64 {
        a.iter()
            .zip(b)
            .zip(&numeric)
            .filter(|(_, &num)| num)
            .map(|((x, y), _)| (x - y).powi(2))
            .sum()
    };
    let neighbors: Vec<Vec<usize>> = minority
        .iter()
        .map(|&i| {
            let mut cand: Vec<(f64, usize)> = minority
                .iter()
                .filter(|&&j| j != i)
                .map(|&j| (dist2(&train.rows[i], &train.rows[j]), j))
                .collect();
            cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            cand.truncate(effective_k);
            cand.into_iter().map(|(_, j)| j).collect()
        })
        .collect();

    let mut data = train.clone();
    let mut parents = Vec::with_capacity(needed);
    for s in 0..needed {
        let mut rng = rng::substream(&[seed, rng::tag::SMOTE, s as u64]);
        let b = rng.random_range(0..minority.len());
        let nb = neighbors[b][rng.random_range(0..effective_k)];
        let lambda: f64 = rng.random();
        let base = &train.rows[minority[b]];
        let other = &train.rows[nb];
        let row: Vec<f64> = base
            .iter()
            .zip(other)
            .zip(&numeric)
            .map(|((&x, &y), &num)| if num { x + lambda * (y - x) } else { x })
            .collect();
        data.rows.push(row);
        data.labels.push(minority_class);
        parents.push((minority[b], nb));
    }
    Ok(SmoteOutcome {
        data,
        n_synthetic: needed,
        effective_k,
        warning,
        parents,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::FeatureMeta;

    fn imbalanced(n_pos: usize, n_neg: usize) -> Dataset {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n_neg {
            rows.push(vec![i as f64, -(i as f64), 1.0]);
            labels.push(0);
        }
        for i in 0..n_pos {
            rows.push(vec![10.0 + i as f64, 3.0 * i as f64, (i % 2) as f64]);
            labels.push(1);
        }
        let meta = vec![
            FeatureMeta::numerical("a"),
            FeatureMeta::numerical("b"),
            FeatureMeta::categorical("c"),
        ];
        Dataset::new(rows, labels, meta).unwrap()
    }

    #[test]
    fn balances_classes() {
        let out = smote(&imbalanced(3, 10), 5, 1).unwrap();
        assert_eq!(out.data.class_counts(), [10, 10]);
        assert_eq!(out.n_synthetic, 7);
    }

    #[test]
    fn reduces_k_with_a_warning() {
        let out = smote(&imbalanced(3, 10), 5, 1).unwrap();
        assert_eq!(out.effective_k, 2);
        assert!(out.warning.is_some());
        let ok = smote(&imbalanced(8, 10), 5, 1).unwrap();
        assert_eq!(ok.effective_k, 5);
        assert!(ok.warning.is_none());
    }

    #[test]
    fn synthetic_rows_lie_between_parents() {
        let train = imbalanced(6, 20);
        let out = smote(&train, 3, 9).unwrap();
        for (s, &(b, nb)) in out.parents.iter().enumerate() {
            let row = &out.data.rows[train.len() + s];
            let (x, y) = (&train.rows[b], &train.rows[nb]);
            for j in 0..2 {
                let (lo, hi) = (x[j].min(y[j]), x[j].max(y[j]));
                assert!(row[j] >= lo - 1e-12 && row[j] <= hi + 1e-12);
            }
            assert_eq!(row[2], x[2], "categorical copied from base row");
        }
    }

    #[test]
    fn deterministic() {
        let train = imbalanced(4, 12);
        assert_eq!(smote(&train, 2, 3).unwrap(), smote(&train, 2, 3).unwrap());
    }

    #[test]
    fn balanced_input_is_unchanged() {
        let train = imbalanced(5, 5);
        assert_eq!(smote(&train, 2, 0).unwrap().data, train);
    }
}
