//! Attribution methods behind a common trait, selected by name.

mod shapley;
mod surrogate;

use std::collections::BTreeMap;

use cies_core::AttributionVector;
use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::predictor::Predictor;

pub use shapley::{ExactShapley, ShapleyParams};
pub use surrogate::{LinearSurrogate, SurrogateParams};

pub trait Explainer: Send + Sync + std::fmt::Debug {
    fn name(&self) -> &'static str;

    /// Attribution of the positive-class probability at `x`.
    fn explain(&self, model: &dyn Predictor, x: &[f64]) -> Result<AttributionVector>;
}

/// Training-side information an explainer may need.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplainerContext {
    /// Reference rows for the interventional value function.
    pub background: Vec<Vec<f64>>,
    /// Per-feature sampling scale for the surrogate; 0 holds a feature fixed.
    pub feature_scales: Vec<f64>,
    pub seed: u64,
}

impl ExplainerContext {
    pub fn n_features(&self) -> usize {
        self.feature_scales.len()
    }

    pub fn background_mean(&self) -> Vec<f64> {
        let m = self.n_features();
        let n = self.background.len().max(1) as f64;
        (0..m)
            .map(|j| self.background.iter().map(|r| r[j]).sum::<f64>() / n)
            .collect()
    }
}

pub(crate) fn check_dims(model: &dyn Predictor, x: &[f64], expected: usize) -> Result<()> {
    for found in [model.n_features(), x.len()] {
        if found != expected {
            return Err(ModelError::Dimension { expected, found });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExplainerSpec {
    ExactShapley(ShapleyParams),
    LinearSurrogate(SurrogateParams),
}

impl Default for ExplainerSpec {
    fn default() -> Self {
        ExplainerSpec::ExactShapley(ShapleyParams::default())
    }
}

impl ExplainerSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ExplainerSpec::ExactShapley(_) => "exact_shapley",
            ExplainerSpec::LinearSurrogate(_) => "linear_surrogate",
        }
    }

    pub fn build(&self, ctx: &ExplainerContext) -> Result<Box<dyn Explainer>> {
        Ok(match self {
            ExplainerSpec::ExactShapley(p) => {
                Box::new(ExactShapley::new(ctx.background.clone(), p.max_features)?)
            }
            ExplainerSpec::LinearSurrogate(p) => Box::new(LinearSurrogate::new(
                p.clone(),
                ctx.feature_scales.clone(),
                ctx.background_mean(),
                ctx.seed,
            )?),
        })
    }
}

/// Name → default explainer specification.
#[derive(Debug, Clone)]
pub struct ExplainerRegistry {
    entries: BTreeMap<&'static str, fn() -> ExplainerSpec>,
}

impl Default for ExplainerRegistry {
    fn default() -> Self {
        let shapley = || ExplainerSpec::ExactShapley(ShapleyParams::default());
        let surrogate = || ExplainerSpec::LinearSurrogate(SurrogateParams::default());
        let mut r = ExplainerRegistry::empty();
        r.register("shapley", shapley);
        r.register("exact_shapley", shapley);
        r.register("shap", shapley);
        r.register("surrogate", surrogate);
        r.register("linear_surrogate", surrogate);
        r.register("lime", surrogate);
        r
    }
}

impl ExplainerRegistry {
    pub fn empty() -> Self {
        ExplainerRegistry {
            entries: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, name: &'static str, make: fn() -> ExplainerSpec) {
        self.entries.insert(name, make);
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.keys().copied()
    }

    pub fn lookup(&self, name: &str) -> Result<ExplainerSpec> {
        self.entries
            .get(name.to_ascii_lowercase().as_str())
            .map(|make| make())
            .ok_or_else(|| ModelError::Unknown {
                kind: "explainer",
                name: name.to_string(),
            })
    }
}
