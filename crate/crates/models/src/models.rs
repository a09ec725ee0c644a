//! Tree-based classifiers and the name-keyed registry that builds them.

use std::collections::BTreeMap;

use cies_core::rng;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{ModelError, Result};
use crate::predictor::{sigmoid, Predictor};
use crate::tree::{Criterion, Tree, TreeParams};

#[derive(Debug, Clone, Copy, PartialEq)]
enum Link {
    /// Average of member-tree probabilities.
    Mean,
    /// `sigmoid(base + sum of tree margins)`.
    Logistic { base: f64 },
}

/// A trained tree ensemble. A single CART is an ensemble of one.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeEnsemble {
    kind: &'static str,
    trees: Vec<Tree>,
    link: Link,
    n_features: usize,
}

impl TreeEnsemble {
    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    /// Raw additive margin for boosted models, mean probability otherwise.
    fn raw(&self, x: &[f64]) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.predict(x)).sum();
        match self.link {
            Link::Mean => sum / self.trees.len() as f64,
            Link::Logistic { base } => base + sum,
        }
    }
}

impl Predictor for TreeEnsemble {
    fn name(&self) -> &str {
        self.kind
    }

    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict_proba(&self, x: &[f64]) -> f64 {
        match self.link {
            Link::Mean => self.raw(x),
            Link::Logistic { .. } => sigmoid(self.raw(x)),
        }
    }

    fn coalition_outputs(&self, x: &[f64], background: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for t in &self.trees {
            t.accumulate_coalitions(x, background, 1.0, out);
        }
        match self.link {
            Link::Mean => {
                let n = self.trees.len() as f64;
                out.iter_mut().for_each(|v| *v /= n);
            }
            Link::Logistic { base } => out.iter_mut().for_each(|v| *v = sigmoid(base + *v)),
        }
    }
}

/// Something that turns a training set into a predictor.
pub trait ModelTrainer: std::fmt::Debug + Send + Sync {
    fn name(&self) -> &'static str;

    fn train(&self, data: &Dataset, seed: u64) -> Result<Box<dyn Predictor>>;
}

fn check_trainable(data: &Dataset) -> Result<()> {
    if data.is_empty() || data.n_features() == 0 {
        return Err(ModelError::Data("cannot train on an empty dataset".into()));
    }
    Ok(())
}

fn gini_targets(data: &Dataset) -> Vec<(f64, f64)> {
    data.labels.iter().map(|&y| (y as f64, 0.0)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CartParams {
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
}

impl Default for CartParams {
    fn default() -> Self {
        CartParams {
            max_depth: Some(6),
            min_leaf: 1,
        }
    }
}

impl ModelTrainer for CartParams {
    fn name(&self) -> &'static str {
        "cart"
    }

    fn train(&self, data: &Dataset, seed: u64) -> Result<Box<dyn Predictor>> {
        check_trainable(data)?;
        let mut rng = rng::substream(&[seed, rng::tag::MODEL]);
        let params = TreeParams {
            max_depth: self.max_depth,
            min_leaf: self.min_leaf,
            ..Default::default()
        };
        let tree = Tree::fit(
            &data.rows,
            &gini_targets(data),
            (0..data.len()).collect(),
            Criterion::Gini,
            params,
            &mut rng,
        );
        Ok(Box::new(TreeEnsemble {
            kind: "cart",
            trees: vec![tree],
            link: Link::Mean,
            n_features: data.n_features(),
        }))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    pub min_split: usize,
    /// Features tried per split; `None` means `round(sqrt(M))`.
    pub max_features: Option<usize>,
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 64,
            max_depth: None,
            min_leaf: 2,
            min_split: 5,
            max_features: None,
            bootstrap: true,
        }
    }
}

impl ModelTrainer for ForestParams {
    fn name(&self) -> &'static str {
        "forest"
    }

    fn train(&self, data: &Dataset, seed: u64) -> Result<Box<dyn Predictor>> {
        Ok(Box::new(self.fit(data, seed)?))
    }
}

impl ForestParams {
    pub fn fit(&self, data: &Dataset, seed: u64) -> Result<TreeEnsemble> {
        check_trainable(data)?;
        if self.n_trees == 0 {
            return Err(ModelError::InvalidParameter(
                "forest needs n_trees >= 1".into(),
            ));
        }
        let m = data.n_features();
        let mtry = self
            .max_features
            .unwrap_or_else(|| ((m as f64).sqrt().round() as usize).max(1))
            .clamp(1, m);
        let params = TreeParams {
            max_depth: self.max_depth,
            min_leaf: self.min_leaf,
            min_split: self.min_split,
            max_features: Some(mtry),
        };
        let targets = gini_targets(data);
        let n = data.len();
        let trees = (0..self.n_trees)
            .map(|t| {
                let mut rng = rng::substream(&[seed, rng::tag::MODEL, t as u64]);
                let sample = if self.bootstrap {
                    (0..n).map(|_| rng.random_range(0..n)).collect()
                } else {
                    (0..n).collect()
                };
                Tree::fit(
                    &data.rows,
                    &targets,
                    sample,
                    Criterion::Gini,
                    params,
                    &mut rng,
                )
            })
            .collect();
        Ok(TreeEnsemble {
            kind: "forest",
            trees,
            link: Link::Mean,
            n_features: m,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GbtParams {
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_leaf: usize,
    /// L2 penalty on leaf values.
    pub lambda: f64,
    /// Row fraction used per round; 1 uses every row.
    pub subsample: f64,
}

impl Default for GbtParams {
    fn default() -> Self {
        GbtParams {
            n_rounds: 100,
            learning_rate: 0.1,
            max_depth: 3,
            min_leaf: 1,
            lambda: 1.0,
            subsample: 1.0,
        }
    }
}

impl ModelTrainer for GbtParams {
    fn name(&self) -> &'static str {
        "gbt"
    }

    fn train(&self, data: &Dataset, seed: u64) -> Result<Box<dyn Predictor>> {
        Ok(Box::new(self.fit(data, seed)?.0))
    }
}

pub fn log_loss(labels: &[u8], probs: &[f64]) -> f64 {
    let eps = 1e-15;
    labels
        .iter()
        .zip(probs)
        .map(|(&y, &p)| {
            let p = p.clamp(eps, 1.0 - eps);
            if y == 1 {
                -p.ln()
            } else {
                -(1.0 - p).ln()
            }
        })
        .sum::<f64>()
        / labels.len() as f64
}

impl GbtParams {
    /// Trains the ensemble and returns the training log-loss after the base
    /// margin (index 0) and after each round.
    pub fn fit(&self, data: &Dataset, seed: u64) -> Result<(TreeEnsemble, Vec<f64>)> {
        check_trainable(data)?;
        if self.n_rounds == 0 {
            return Err(ModelError::InvalidParameter(
                "boosting needs n_rounds >= 1".into(),
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(ModelError::InvalidParameter(format!(
                "learning rate {} outside (0, 1]",
                self.learning_rate
            )));
        }
        if !(self.subsample > 0.0 && self.subsample <= 1.0) {
            return Err(ModelError::InvalidParameter(format!(
                "subsample {} outside (0, 1]",
                self.subsample
            )));
        }
        let n = data.len();
        let rate = (data.class_counts()[1] as f64 / n as f64).clamp(1e-6, 1.0 - 1e-6);
        let base = (rate / (1.0 - rate)).ln();
        let mut margin = vec![base; n];
        let y: Vec<f64> = data.labels.iter().map(|&v| v as f64).collect();
        let params = TreeParams {
            max_depth: Some(self.max_depth),
            min_leaf: self.min_leaf,
            ..Default::default()
        };
        let probs = |m: &[f64]| m.iter().map(|&v| sigmoid(v)).collect::<Vec<_>>();
        let mut losses = vec![log_loss(&data.labels, &probs(&margin))];
        let mut trees = Vec::with_capacity(self.n_rounds);
        for round in 0..self.n_rounds {
            let mut rng = rng::substream(&[seed, rng::tag::MODEL, round as u64]);
            let targets: Vec<(f64, f64)> = margin
                .iter()
                .zip(&y)
                .map(|(&f, &yi)| {
                    let p = sigmoid(f);
                    (p - yi, (p * (1.0 - p)).max(1e-12))
                })
                .collect();
            let sample: Vec<usize> = if self.subsample < 1.0 {
                (0..n)
                    .filter(|_| rng.random::<f64>() < self.subsample)
                    .collect()
            } else {
                (0..n).collect()
            };
            let mut tree = Tree::fit(
                &data.rows,
                &targets,
                sample,
                Criterion::Newton {
                    lambda: self.lambda,
                },
                params,
                &mut rng,
            );
            tree.scale_leaves(self.learning_rate);
            for (f, row) in margin.iter_mut().zip(&data.rows) {
                *f += tree.predict(row);
            }
            losses.push(log_loss(&data.labels, &probs(&margin)));
            trees.push(tree);
        }
        Ok((
            TreeEnsemble {
                kind: "gbt",
                trees,
                link: Link::Logistic { base },
                n_features: data.n_features(),
            },
            losses,
        ))
    }
}

/// Serializable model choice; each variant carries its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    Cart(CartParams),
    Forest(ForestParams),
    Gbt(GbtParams),
}

impl ModelSpec {
    pub fn trainer(&self) -> &dyn ModelTrainer {
        match self {
            ModelSpec::Cart(p) => p,
            ModelSpec::Forest(p) => p,
            ModelSpec::Gbt(p) => p,
        }
    }

    pub fn name(&self) -> &'static str {
        self.trainer().name()
    }

    pub fn train(&self, data: &Dataset, seed: u64) -> Result<Box<dyn Predictor>> {
        self.trainer().train(data, seed)
    }
}

/// Name → default model specification.
#[derive(Debug, Clone)]
pub struct ModelRegistry {
    entries: BTreeMap<&'static str, fn() -> ModelSpec>,
}

impl Default for ModelRegistry {
    fn default() -> Self {
        let mut r = ModelRegistry::empty();
        r.register("cart", || ModelSpec::Cart(CartParams::default()));
        r.register("tree", || ModelSpec::Cart(CartParams::default()));
        r.register("forest", || ModelSpec::Forest(ForestParams::default()));
        r.register("random_forest", || {
            ModelSpec::Forest(ForestParams::default())
        });
        r.register("gbt", || ModelSpec::Gbt(GbtParams::default()));
        r.register("boosting", || ModelSpec::Gbt(GbtParams::default()));
        r
    }
}

impl ModelRegistry {
    pub fn empty() -> Self {
        ModelRegistry {
            entries: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, name: &'static str, make: fn() -> ModelSpec) {
        self.entries.insert(name, make);
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.keys().copied()
    }

    pub fn lookup(&self, name: &str) -> Result<ModelSpec> {
        self.entries
            .get(name.to_ascii_lowercase().as_str())
            .map(|make| make())
            .ok_or_else(|| ModelError::Unknown {
                kind: "model",
                name: name.to_string(),
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn two_moons(n: usize, seed: u64) -> Dataset {
        let mut rng = rng::substream(&[seed]);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n {
            let y = (i % 2) as u8;
            let t: f64 = rng.random::<f64>() * std::f64::consts::PI;
            let (cx, cy) = if y == 0 {
                (t.cos(), t.sin())
            } else {
                (1.0 - t.cos(), 0.5 - t.sin())
            };
            rows.push(vec![
                cx + 0.2 * (rng.random::<f64>() - 0.5),
                cy + 0.2 * (rng.random::<f64>() - 0.5),
                rng.random::<f64>(),
            ]);
            labels.push(y);
        }
        Dataset::numeric(rows, labels).unwrap()
    }

    fn accuracy(model: &dyn Predictor, d: &Dataset) -> f64 {
        let hits = d
            .rows
            .iter()
            .zip(&d.labels)
            .filter(|(r, &y)| u8::from(model.predict_proba(r) >= 0.5) == y)
            .count();
        hits as f64 / d.len() as f64
    }

    #[test]
    fn all_models_learn_and_stay_in_range() {
        let train = two_moons(300, 1);
        let test = two_moons(200, 2);
        let reg = ModelRegistry::default();
        for name in ["cart", "forest", "gbt"] {
            let model = reg.lookup(name).unwrap().train(&train, 3).unwrap();
            assert_eq!(model.name(), name);
            let acc = accuracy(model.as_ref(), &test);
            assert!(acc > 0.85, "{name} accuracy {acc}");
            for r in &test.rows {
                let p = model.predict_proba(r);
                assert!((0.0..=1.0).contains(&p));
            }
        }
    }

    #[test]
    fn forest_is_mean_of_trees() {
        let d = two_moons(120, 5);
        let forest = ForestParams {
            n_trees: 7,
            ..Default::default()
        }
        .fit(&d, 1)
        .unwrap();
        for r in d.rows.iter().take(20) {
            let mean = forest.trees().iter().map(|t| t.predict(r)).sum::<f64>() / 7.0;
            assert_abs_diff_eq!(forest.predict_proba(r), mean, epsilon = 1e-15);
        }
    }

    #[test]
    fn single_row_forest_equals_cart() {
        let d = Dataset::numeric(vec![vec![0.3, -1.0]], vec![1]).unwrap();
        let forest = ForestParams {
            n_trees: 1,
            ..Default::default()
        }
        .train(&d, 9)
        .unwrap();
        let cart = CartParams::default().train(&d, 9).unwrap();
        for x in [[0.0, 0.0], [5.0, -5.0]] {
            assert_eq!(forest.predict_proba(&x), cart.predict_proba(&x));
        }
    }

    #[test]
    fn same_seed_same_predictions() {
        let d = two_moons(150, 8);
        for spec in [
            ModelSpec::Forest(ForestParams::default()),
            ModelSpec::Gbt(GbtParams {
                subsample: 0.7,
                ..Default::default()
            }),
        ] {
            let a = spec.train(&d, 4).unwrap();
            let b = spec.train(&d, 4).unwrap();
            let pa: Vec<f64> = a.predict_many(&d.rows);
            assert_eq!(pa, b.predict_many(&d.rows));
        }
    }

    #[test]
    fn boosting_one_round_beats_constant() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let labels: Vec<u8> = (0..10).map(|i| u8::from(i >= 5)).collect();
        let d = Dataset::numeric(rows, labels).unwrap();
        let (_, losses) = GbtParams {
            n_rounds: 1,
            learning_rate: 1.0,
            ..Default::default()
        }
        .fit(&d, 0)
        .unwrap();
        assert_abs_diff_eq!(losses[0], 2f64.ln(), epsilon = 1e-12);
        assert!(losses[1] < losses[0]);
    }

    #[test]
    fn boosting_loss_is_non_increasing() {
        let d = two_moons(200, 3);
        let (model, losses) = GbtParams::default().fit(&d, 0).unwrap();
        for w in losses.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "{} -> {}", w[0], w[1]);
        }
        assert!(d.rows.iter().all(|r| {
            let p = model.predict_proba(r);
            p > 0.0 && p < 1.0
        }));
    }

    #[test]
    fn invalid_hyperparameters() {
        let d = two_moons(20, 0);
        assert!(GbtParams {
            n_rounds: 0,
            ..Default::default()
        }
        .fit(&d, 0)
        .is_err());
        assert!(GbtParams {
            learning_rate: 0.0,
            ..Default::default()
        }
        .fit(&d, 0)
        .is_err());
        assert!(GbtParams {
            learning_rate: 1.5,
            ..Default::default()
        }
        .fit(&d, 0)
        .is_err());
        assert!(ForestParams {
            n_trees: 0,
            ..Default::default()
        }
        .fit(&d, 0)
        .is_err());
    }

    #[test]
    fn fast_coalitions_match_generic_path() {
        #[derive(Debug)]
        struct Plain<'a>(&'a dyn Predictor);
        impl Predictor for Plain<'_> {
            fn name(&self) -> &str {
                "plain"
            }
            fn n_features(&self) -> usize {
                self.0.n_features()
            }
            fn predict_proba(&self, x: &[f64]) -> f64 {
                self.0.predict_proba(x)
            }
        }
        let d = two_moons(150, 11);
        for name in ["cart", "forest", "gbt"] {
            let model = ModelRegistry::default()
                .lookup(name)
                .unwrap()
                .train(&d, 2)
                .unwrap();
            let mut fast = vec![0.0; 8];
            let mut slow = vec![0.0; 8];
            for (x, bg) in [(&d.rows[0], &d.rows[1]), (&d.rows[40], &d.rows[99])] {
                model.coalition_outputs(x, bg, &mut fast);
                Plain(model.as_ref()).coalition_outputs(x, bg, &mut slow);
                for (a, b) in fast.iter().zip(&slow) {
                    assert_abs_diff_eq!(a, b, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn registry_resolves_aliases_and_rejects_unknown() {
        let reg = ModelRegistry::default();
        assert_eq!(reg.lookup("Random_Forest").unwrap().name(), "forest");
        assert!(matches!(reg.lookup("svm"), Err(ModelError::Unknown { .. })));
    }

    #[test]
    fn spec_roundtrips_through_serde() {
        let spec: ModelSpec = serde_json::from_str(r#"{"kind":"gbt","n_rounds":5}"#).unwrap();
        assert_eq!(
            spec,
            ModelSpec::Gbt(GbtParams {
                n_rounds: 5,
                ..Default::default()
            })
        );
    }
}
