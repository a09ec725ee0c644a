//! End-to-end evaluation: split, preprocess, optional oversampling, training,
//! explanation of sampled test instances and their noisy neighborhoods.

use std::time::Instant;

use cies_core::rng::{self, derive_seed, tag};
use cies_core::stats::{
    lipschitz_estimate, lipschitz_lower_bound, prediction_stability, LipschitzMode,
};
use cies_core::{
    baseline_score, mean_perturbation_magnitude, neighborhood, top_k_jaccard, AttributionVector,
    CiesError, Instance, StabilityComponents, WeightSchemeSpec,
};
use cies_models::{
    smote, stratified_split, Dataset, Explainer, ExplainerContext, ExplainerSpec, ModelSpec,
    Predictor, Preprocessor, RawDataset,
};
use rand::seq::SliceRandom;
use sha2::{Digest, Sha256};

use crate::config::{Condition, DatasetSource, RunConfig};
use crate::data::{parse_dataset, synthesize};
use crate::error::{HarnessError, Result};

/// Training data for one condition (raw or oversampled).
#[derive(Debug, Clone)]
pub struct ConditionData {
    pub condition: Condition,
    pub train: Dataset,
    pub n_synthetic: usize,
    pub warning: Option<String>,
}

/// Everything upstream of model training.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub raw: RawDataset,
    /// SHA-256 of the input file, when the data came from disk.
    pub data_sha256: Option<String>,
    pub preprocessor: Preprocessor,
    pub train: Dataset,
    pub test: Dataset,
    /// Original row index of every test row.
    pub test_ids: Vec<usize>,
    pub conditions: Vec<ConditionData>,
    /// Conditions whose training data could not be built, with the reason.
    pub condition_failures: Vec<(Condition, String)>,
    /// Positions in `test` of the evaluated instances.
    pub sample: Vec<usize>,
    pub background: Vec<Vec<f64>>,
    pub feature_scales: Vec<f64>,
    pub numeric_mask: Vec<bool>,
    pub notes: Vec<String>,
}

fn load_raw(cfg: &RunConfig) -> Result<(RawDataset, Option<String>)> {
    match &cfg.dataset {
        DatasetSource::Synthetic(spec) => Ok((synthesize(spec)?, None)),
        DatasetSource::Csv(src) => {
            let bytes = std::fs::read(&src.path).map_err(|e| HarnessError::io(&src.path, e))?;
            let digest = hex::encode(Sha256::digest(&bytes));
            Ok((parse_dataset(&bytes, src)?, Some(digest)))
        }
    }
}

fn sample_instances(
    test: &Dataset,
    n: usize,
    stratified: bool,
    seed: u64,
    notes: &mut Vec<String>,
) -> Vec<usize> {
    let mut rng = rng::substream(&[seed, tag::SAMPLE]);
    if n >= test.len() {
        if n > test.len() {
            notes.push(format!(
                "requested {n} instances but the test split has {}; using all of them",
                test.len()
            ));
        }
        return (0..test.len()).collect();
    }
    let mut chosen = if stratified {
        let mut out = Vec::with_capacity(n);
        let [n0, _] = test.class_counts();
        let take0 = ((n as f64) * n0 as f64 / test.len() as f64).round() as usize;
        for (class, take) in [(0u8, take0), (1u8, n - take0)] {
            let mut idx: Vec<usize> = (0..test.len())
                .filter(|&i| test.labels[i] == class)
                .collect();
            idx.shuffle(&mut rng);
            out.extend(idx.into_iter().take(take));
        }
        out
    } else {
        let mut idx: Vec<usize> = (0..test.len()).collect();
        idx.shuffle(&mut rng);
        idx.truncate(n);
        idx
    };
    chosen.sort_unstable();
    chosen
}

/// Split, preprocess (fitted on training rows only), oversample, and pick
/// background rows and test instances.
pub fn prepare(cfg: &RunConfig) -> Result<Prepared> {
    cfg.validate()?;
    let (raw, data_sha256) = load_raw(cfg)?;
    let (train_idx, test_idx) = stratified_split(&raw.labels, cfg.test_fraction, cfg.seed)?;
    let mut preprocessor = Preprocessor::new();
    let train = preprocessor.fit_transform(&raw.subset(&train_idx))?;
    let test = preprocessor.transform(&raw.subset(&test_idx))?;
    let mut notes = Vec::new();

    let mut conditions = Vec::new();
    let mut condition_failures = Vec::new();
    for &condition in &cfg.conditions {
        let data = match condition {
            Condition::Raw => ConditionData {
                condition,
                train: train.clone(),
                n_synthetic: 0,
                warning: None,
            },
            Condition::Smote => {
                let out = match smote(&train, cfg.smote_k, derive_seed(&[cfg.seed, tag::SMOTE])) {
                    Ok(out) => out,
                    Err(e) => {
                        log::warn!("oversampling failed: {e}");
                        condition_failures.push((condition, e.to_string()));
                        continue;
                    }
                };
                ConditionData {
                    condition,
                    train: out.data,
                    n_synthetic: out.n_synthetic,
                    warning: out.warning,
                }
            }
        };
        conditions.push(data);
    }

    let mut bg_idx: Vec<usize> = (0..train.len()).collect();
    bg_idx.shuffle(&mut rng::substream(&[cfg.seed, tag::BACKGROUND]));
    bg_idx.truncate(cfg.background_size);
    bg_idx.sort_unstable();
    let background = bg_idx.iter().map(|&i| train.rows[i].clone()).collect();
    let feature_scales = train
        .column_moments()
        .into_iter()
        .map(|(_, sd)| sd)
        .collect();
    let sample = sample_instances(
        &test,
        cfg.instances,
        cfg.stratified_instances,
        cfg.seed,
        &mut notes,
    );
    let numeric_mask = train.numeric_mask();
    Ok(Prepared {
        raw,
        data_sha256,
        preprocessor,
        train,
        test,
        test_ids: test_idx,
        conditions,
        condition_failures,
        sample,
        background,
        feature_scales,
        numeric_mask,
        notes,
    })
}

/// A trained model with its explainer.
#[derive(Debug)]
pub struct Trained {
    pub model_name: &'static str,
    pub condition: Condition,
    pub explainer_name: &'static str,
    pub model: Box<dyn Predictor>,
    pub explainer: Box<dyn Explainer>,
}

/// A configuration that could not be trained.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ConfigurationFailure {
    pub model: String,
    pub condition: String,
    pub error: String,
}

pub fn explainer_context(cfg: &RunConfig, p: &Prepared) -> ExplainerContext {
    ExplainerContext {
        background: p.background.clone(),
        feature_scales: p.feature_scales.clone(),
        seed: derive_seed(&[cfg.seed, tag::SURROGATE]),
    }
}

pub fn train_one(
    cfg: &RunConfig,
    p: &Prepared,
    cond: &ConditionData,
    spec: &ModelSpec,
    explainer: &ExplainerSpec,
) -> Result<Trained> {
    let model = spec.train(&cond.train, derive_seed(&[cfg.seed, tag::MODEL]))?;
    let explainer = explainer.build(&explainer_context(cfg, p))?;
    Ok(Trained {
        model_name: spec.name(),
        condition: cond.condition,
        explainer_name: explainer.name(),
        model,
        explainer,
    })
}

/// Trains every (condition, model) pair; failures are collected, not fatal.
pub fn train_all(
    cfg: &RunConfig,
    p: &Prepared,
    explainer: &ExplainerSpec,
) -> (Vec<Trained>, Vec<ConfigurationFailure>) {
    let mut trained = Vec::new();
    let mut failures = Vec::new();
    for (cond, reason) in &p.condition_failures {
        for spec in &cfg.models {
            failures.push(ConfigurationFailure {
                model: spec.name().to_string(),
                condition: cond.name().to_string(),
                error: reason.clone(),
            });
        }
    }
    for cond in &p.conditions {
        for spec in &cfg.models {
            match train_one(cfg, p, cond, spec, explainer) {
                Ok(t) => trained.push(t),
                Err(e) => {
                    log::warn!("{} / {}: {e}", spec.name(), cond.condition.name());
                    failures.push(ConfigurationFailure {
                        model: spec.name().to_string(),
                        condition: cond.condition.name().to_string(),
                        error: e.to_string(),
                    });
                }
            }
        }
    }
    (trained, failures)
}

/// Stability and comparator scores of one explained neighborhood.
#[derive(Debug, Clone, PartialEq)]
pub struct Scores {
    /// One score per configured scheme, in configuration order.
    pub cies: Vec<f64>,
    pub baseline: f64,
    /// Components for the first configured scheme.
    pub primary: StabilityComponents,
    pub lipschitz_max: Option<f64>,
    pub lipschitz_mean: Option<f64>,
    /// Lower bound implied by `lipschitz_max` for the first scheme.
    pub bound: Option<f64>,
    pub delta_bar: f64,
    pub pred_stab: f64,
    pub jaccard: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceRecord {
    pub instance_id: usize,
    pub label: u8,
    pub prediction: f64,
    pub scores: Scores,
    pub runtime_secs: f64,
}

/// Explanations of an instance and of its neighbors under one noise level.
#[derive(Debug, Clone)]
pub struct Explained {
    pub origin: Instance,
    pub phi: AttributionVector,
    pub prediction: f64,
    pub neighbors: cies_core::NeighborSet,
    pub neighbor_phis: Vec<AttributionVector>,
    pub neighbor_preds: Vec<f64>,
}

impl Explained {
    /// The same neighborhood restricted to its first `k` neighbors. Neighbor
    /// draws are index-keyed, so this equals a fresh evaluation with `k`.
    pub fn prefix(&self, k: usize) -> Explained {
        let k = k.min(self.neighbor_phis.len());
        let mut out = self.clone();
        out.neighbors.neighbors.truncate(k);
        out.neighbor_phis.truncate(k);
        out.neighbor_preds.truncate(k);
        out
    }
}

pub fn explain_neighborhood(
    t: &Trained,
    x: &[f64],
    numeric_mask: &[bool],
    epsilon: f64,
    k: usize,
    neighbor_seed: u64,
) -> Result<Explained> {
    let origin = Instance::new(x.to_vec(), numeric_mask.to_vec())?;
    let phi = t.explainer.explain(t.model.as_ref(), x)?;
    let ns = neighborhood(&origin, k, epsilon, neighbor_seed)?;
    let mut neighbor_phis = Vec::with_capacity(k);
    let mut neighbor_preds = Vec::with_capacity(k);
    for n in &ns.neighbors {
        neighbor_phis.push(t.explainer.explain(t.model.as_ref(), n.values())?);
        neighbor_preds.push(t.model.predict_proba(n.values()));
    }
    Ok(Explained {
        prediction: t.model.predict_proba(x),
        origin,
        phi,
        neighbors: ns,
        neighbor_phis,
        neighbor_preds,
    })
}

/// Scores an explained neighborhood.
pub fn score_explained(
    e: &Explained,
    schemes: &[WeightSchemeSpec],
    jaccard_k: usize,
) -> Result<Scores> {
    let mut cies = Vec::with_capacity(schemes.len());
    let mut primary = None;
    for spec in schemes {
        let c = StabilityComponents::compute(&e.phi, &e.neighbor_phis, spec.build().as_ref())?;
        cies.push(c.score);
        primary.get_or_insert(c);
    }
    let primary =
        primary.ok_or_else(|| HarnessError::Config("no weighting scheme configured".into()))?;
    let baseline = baseline_score(&e.phi, &e.neighbor_phis)?;
    let lip = |mode| match lipschitz_estimate(&e.neighbors, &e.phi, &e.neighbor_phis, mode) {
        Ok(l) => Ok(Some(l)),
        Err(CiesError::UndefinedEstimate) => Ok(None),
        Err(err) => Err(err),
    };
    let lipschitz_max = lip(LipschitzMode::Max)?;
    let lipschitz_mean = lip(LipschitzMode::Mean)?;
    let delta_bar = mean_perturbation_magnitude(&e.neighbors);
    let bound = lipschitz_max
        .map(|l| lipschitz_lower_bound(l, &primary.weights, delta_bar, primary.weighted_magnitude))
        .transpose()?;
    let pred_stab =
        prediction_stability(e.prediction.clamp(0.0, 1.0), &clamped(&e.neighbor_preds))?;
    let k = jaccard_k.min(e.phi.len());
    let mut jac = 0.0;
    for n in &e.neighbor_phis {
        jac += top_k_jaccard(&e.phi, n, k)?;
    }
    let jaccard = jac / e.neighbor_phis.len() as f64;
    Ok(Scores {
        cies,
        baseline,
        primary,
        lipschitz_max,
        lipschitz_mean,
        bound,
        delta_bar,
        pred_stab,
        jaccard,
    })
}

fn clamped(p: &[f64]) -> Vec<f64> {
    p.iter().map(|v| v.clamp(0.0, 1.0)).collect()
}

pub fn neighbor_seed(cfg: &RunConfig, instance_id: usize) -> u64 {
    derive_seed(&[cfg.seed, tag::NEIGHBOR, instance_id as u64])
}

#[allow(clippy::too_many_arguments)]
pub fn evaluate_instance(
    t: &Trained,
    x: &[f64],
    label: u8,
    instance_id: usize,
    numeric_mask: &[bool],
    epsilon: f64,
    k: usize,
    seed: u64,
    schemes: &[WeightSchemeSpec],
    jaccard_k: usize,
) -> Result<InstanceRecord> {
    let start = Instant::now();
    let e = explain_neighborhood(t, x, numeric_mask, epsilon, k, seed)?;
    let scores = score_explained(&e, schemes, jaccard_k)?;
    Ok(InstanceRecord {
        instance_id,
        label,
        prediction: e.prediction,
        scores,
        runtime_secs: start.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct InstanceFailure {
    pub instance_id: usize,
    pub error: String,
}

/// All per-instance results of one (model, condition, explainer) triple.
#[derive(Debug, Clone)]
pub struct ConfigurationRun {
    pub model: String,
    pub condition: String,
    pub explainer: String,
    pub epsilon: f64,
    pub accuracy: f64,
    pub f1: f64,
    pub records: Vec<InstanceRecord>,
    pub failures: Vec<InstanceFailure>,
}

pub fn accuracy_f1(model: &dyn Predictor, data: &Dataset) -> (f64, f64) {
    let (mut tp, mut fp, mut fn_, mut hits) = (0usize, 0usize, 0usize, 0usize);
    for (row, &y) in data.rows.iter().zip(&data.labels) {
        let pred = u8::from(model.predict_proba(row) >= 0.5);
        hits += usize::from(pred == y);
        match (pred, y) {
            (1, 1) => tp += 1,
            (1, 0) => fp += 1,
            (0, 1) => fn_ += 1,
            _ => {}
        }
    }
    let denom = 2 * tp + fp + fn_;
    let f1 = if denom == 0 {
        0.0
    } else {
        2.0 * tp as f64 / denom as f64
    };
    (hits as f64 / data.len().max(1) as f64, f1)
}

/// Evaluates every sampled instance of `p` under `t`.
pub fn evaluate_configuration(
    cfg: &RunConfig,
    p: &Prepared,
    t: &Trained,
    epsilon: f64,
    k: usize,
) -> ConfigurationRun {
    let (accuracy, f1) = accuracy_f1(t.model.as_ref(), &p.test);
    let mut records = Vec::with_capacity(p.sample.len());
    let mut failures = Vec::new();
    for &pos in &p.sample {
        let id = p.test_ids[pos];
        match evaluate_instance(
            t,
            &p.test.rows[pos],
            p.test.labels[pos],
            id,
            &p.numeric_mask,
            epsilon,
            k,
            neighbor_seed(cfg, id),
            &cfg.schemes,
            cfg.jaccard_k,
        ) {
            Ok(r) => records.push(r),
            Err(e) => failures.push(InstanceFailure {
                instance_id: id,
                error: e.to_string(),
            }),
        }
    }
    ConfigurationRun {
        model: t.model_name.to_string(),
        condition: t.condition.name().to_string(),
        explainer: t.explainer_name.to_string(),
        epsilon,
        accuracy,
        f1,
        records,
        failures,
    }
}
