use cies_models::models::{CartParams, ForestParams};
use cies_models::{smote, stratified_split, Dataset, FeatureMeta, ModelTrainer, Predictor};
use proptest::prelude::*;
use rand::Rng;

fn minority_pair_plus_majority(n_major: usize) -> Dataset {
    let mut rows = vec![vec![0.0, 0.0], vec![1.0, 1.0]];
    let mut labels = vec![1, 1];
    for i in 0..n_major {
        rows.push(vec![5.0 + i as f64, -3.0]);
        labels.push(0);
    }
    Dataset::numeric(rows, labels).unwrap()
}

#[test]
fn smote_points_lie_on_the_minority_segment() {
    let d = minority_pair_plus_majority(6);
    let out = smote(&d, 1, 2).unwrap();
    assert_eq!(out.data.class_counts(), [6, 6]);
    for row in &out.data.rows[d.len()..] {
        assert_eq!(row[0], row[1]);
        assert!((0.0..=1.0).contains(&row[0]));
    }
}

#[test]
fn smote_balances_eighty_twenty() {
    let mut rng = cies_core::rng::substream(&[5]);
    let rows: Vec<Vec<f64>> = (0..100).map(|_| vec![rng.random(), rng.random()]).collect();
    let labels: Vec<u8> = (0..100).map(|i| u8::from(i < 20)).collect();
    let d = Dataset::numeric(rows, labels).unwrap();
    let out = smote(&d, 5, 1).unwrap();
    assert_eq!(out.data.class_counts(), [80, 80]);
    assert_eq!(&out.data.rows[..100], &d.rows[..]);
    assert_eq!(out, smote(&d, 5, 1).unwrap());
}

#[test]
fn smote_needs_two_minority_rows() {
    let d = Dataset::numeric(vec![vec![0.0], vec![1.0], vec![2.0]], vec![1, 0, 0]).unwrap();
    assert!(smote(&d, 1, 0).is_err());
}

#[test]
fn split_then_models_are_reproducible() {
    let mut rng = cies_core::rng::substream(&[8]);
    let rows: Vec<Vec<f64>> = (0..200)
        .map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let labels: Vec<u8> = rows.iter().map(|r| u8::from(r[0] - r[3] > 0.1)).collect();
    let meta = (0..4)
        .map(|j| FeatureMeta::numerical(format!("f{j}")))
        .collect();
    let d = Dataset::new(rows, labels, meta).unwrap();
    let run = || {
        let (train, test) = stratified_split(&d.labels, 0.2, 3).unwrap();
        let model = ForestParams::default().train(&d.subset(&train), 3).unwrap();
        model.predict_many(&d.subset(&test).rows)
    };
    assert_eq!(run(), run());
}

/// Variance of prediction changes under small input noise on a fixed grid.
fn perturbation_variance(model: &dyn Predictor, grid: &[Vec<f64>], seed: u64) -> f64 {
    let mut rng = cies_core::rng::substream(&[seed, 1]);
    let diffs: Vec<f64> = grid
        .iter()
        .map(|x| {
            let z: Vec<f64> = x
                .iter()
                .map(|v| v + 0.15 * (rng.random::<f64>() - 0.5))
                .collect();
            model.predict_proba(&z) - model.predict_proba(x)
        })
        .collect();
    let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
    diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / diffs.len() as f64
}

#[test]
fn forest_is_smoother_than_a_single_tree() {
    let mut rng = cies_core::rng::substream(&[21]);
    let rows: Vec<Vec<f64>> = (0..400)
        .map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
        .collect();
    let labels: Vec<u8> = rows
        .iter()
        .map(|r| u8::from(r[0] * r[0] + r[1] > 0.2 + 0.3 * (rng.random::<f64>() - 0.5)))
        .collect();
    let d = Dataset::numeric(rows, labels).unwrap();
    let forest = ForestParams::default().train(&d, 1).unwrap();
    let cart = CartParams::default().train(&d, 1).unwrap();
    let grid: Vec<Vec<f64>> = (0..30)
        .flat_map(|i| (0..30).map(move |k| vec![-0.9 + 0.06 * i as f64, -0.9 + 0.06 * k as f64]))
        .collect();
    let vf = perturbation_variance(forest.as_ref(), &grid, 4);
    let vc = perturbation_variance(cart.as_ref(), &grid, 4);
    assert!(vf <= 1.1 * vc, "forest {vf} vs cart {vc}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn split_is_a_stratified_partition(labels in prop::collection::vec(0u8..2, 4..200), frac in 0.05f64..0.95, seed: u64) {
        prop_assume!(labels.contains(&0) && labels.contains(&1));
        let (train, test) = stratified_split(&labels, frac, seed).unwrap();
        let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..labels.len()).collect::<Vec<_>>());
        for class in [0u8, 1] {
            let n = labels.iter().filter(|&&y| y == class).count() as f64;
            let k = test.iter().filter(|&&i| labels[i] == class).count() as f64;
            prop_assert!(k == (frac * n).floor() || k == (frac * n).ceil());
        }
    }

    #[test]
    fn smote_stays_within_parent_intervals(seed: u64, n_min in 2usize..12, k in 1usize..8) {
        let mut rng = cies_core::rng::substream(&[seed]);
        let n = 30;
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..3).map(|_| rng.random_range(-5.0..5.0)).collect()).collect();
        let labels: Vec<u8> = (0..n).map(|i| u8::from(i < n_min)).collect();
        let d = Dataset::numeric(rows, labels).unwrap();
        let out = smote(&d, k, seed).unwrap();
        prop_assert_eq!(out.data.class_counts(), [n - n_min, n - n_min]);
        for (s, &(a, b)) in out.parents.iter().enumerate() {
            let row = &out.data.rows[n + s];
            for j in 0..3 {
                let (lo, hi) = (d.rows[a][j].min(d.rows[b][j]), d.rows[a][j].max(d.rows[b][j]));
                prop_assert!(row[j] >= lo - 1e-12 && row[j] <= hi + 1e-12);
            }
        }
    }
}
