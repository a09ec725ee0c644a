//! Rank-based weighting schemes.
//!
//! Each scheme maps an importance rank (1 = most important) to an
//! unnormalized weight. Schemes are registered by name in a
//! [`SchemeRegistry`] so the harness can pick them from configuration at
//! runtime; [`resolve_weights`] turns a scheme plus a ranking into a
//! normalized, feature-indexed [`WeightVector`].

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::attribution::RankVector;
use crate::error::{CiesError, Result};

pub const DEFAULT_ALPHA: f64 = 0.5;
pub const DEFAULT_TOP_K: usize = 5;

/// A weighting strategy over importance ranks.
pub trait RankWeighting: Send + Sync + fmt::Debug {
    /// Registry name, also used as the report key.
    fn name(&self) -> &'static str;

    /// Checks that the scheme can be resolved for `m` features.
    fn validate(&self, m: usize) -> Result<()> {
        if m == 0 {
            return Err(CiesError::invalid(
                "weighting requires at least one feature",
            ));
        }
        Ok(())
    }

    /// Unnormalized weight of a feature at `rank` out of `m`.
    fn raw_weight(&self, rank: usize, m: usize) -> f64;
}

/// `1 / r`
#[derive(Debug, Clone, Copy, Default)]
pub struct Harmonic;

impl RankWeighting for Harmonic {
    fn name(&self) -> &'static str {
        "harmonic"
    }

    fn raw_weight(&self, rank: usize, _m: usize) -> f64 {
        1.0 / rank as f64
    }
}

/// `exp(-alpha * r)`
#[derive(Debug, Clone, Copy)]
pub struct Exponential {
    pub alpha: f64,
}

impl Default for Exponential {
    fn default() -> Self {
        Exponential {
            alpha: DEFAULT_ALPHA,
        }
    }
}

impl RankWeighting for Exponential {
    fn name(&self) -> &'static str {
        "exponential"
    }

    fn validate(&self, m: usize) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(CiesError::invalid(format!(
                "exponential alpha must be positive, got {}",
                self.alpha
            )));
        }
        Harmonic.validate(m)
    }

    fn raw_weight(&self, rank: usize, _m: usize) -> f64 {
        (-self.alpha * rank as f64).exp()
    }
}

/// `1 / log2(r + 1)`, the nDCG discount.
#[derive(Debug, Clone, Copy, Default)]
pub struct Logarithmic;

impl RankWeighting for Logarithmic {
    fn name(&self) -> &'static str {
        "log"
    }

    fn raw_weight(&self, rank: usize, _m: usize) -> f64 {
        1.0 / (rank as f64 + 1.0).log2()
    }
}

/// Indicator of the `k` best ranks.
#[derive(Debug, Clone, Copy)]
pub struct TopK {
    pub k: usize,
}

impl Default for TopK {
    fn default() -> Self {
        TopK { k: DEFAULT_TOP_K }
    }
}

impl RankWeighting for TopK {
    fn name(&self) -> &'static str {
        "topk"
    }

    fn validate(&self, m: usize) -> Result<()> {
        if self.k == 0 || self.k > m {
            return Err(CiesError::invalid(format!(
                "top-k cutoff {} outside 1..={m}",
                self.k
            )));
        }
        Ok(())
    }

    fn raw_weight(&self, rank: usize, _m: usize) -> f64 {
        if rank <= self.k {
            1.0
        } else {
            0.0
        }
    }
}

/// Equal weight for every feature.
#[derive(Debug, Clone, Copy, Default)]
pub struct Uniform;

impl RankWeighting for Uniform {
    fn name(&self) -> &'static str {
        "uniform"
    }

    fn raw_weight(&self, _rank: usize, _m: usize) -> f64 {
        1.0
    }
}

/// Normalized, feature-indexed weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    /// Wraps explicit weights; they must be non-negative and sum to 1.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(CiesError::invalid(
                "weights must be finite and non-negative",
            ));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(CiesError::invalid(format!("weights sum to {total}, not 1")));
        }
        Ok(WeightVector(weights))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Euclidean norm of the weights.
    pub fn l2_norm(&self) -> f64 {
        self.0.iter().map(|w| w * w).sum::<f64>().sqrt()
    }
}

/// Resolves `scheme` against a ranking. Entry `j` of the result is the weight
/// of feature `j`, not of rank position `j`.
pub fn resolve_weights(scheme: &dyn RankWeighting, ranks: &RankVector) -> Result<WeightVector> {
    let m = ranks.len();
    scheme.validate(m)?;
    let raw: Vec<f64> = ranks
        .as_slice()
        .iter()
        .map(|&r| scheme.raw_weight(r, m))
        .collect();
    let total: f64 = raw.iter().sum();
    if !(total > 0.0) {
        return Err(CiesError::invalid(format!(
            "scheme {} produced no weight mass",
            scheme.name()
        )));
    }
    Ok(WeightVector(raw.into_iter().map(|w| w / total).collect()))
}

/// Share of the total weight held by the `t` most important of `m` ranks.
pub fn top_mass(scheme: &dyn RankWeighting, m: usize, t: usize) -> Result<f64> {
    scheme.validate(m)?;
    if t > m {
        return Err(CiesError::invalid(format!("top {t} of {m} features")));
    }
    let w: Vec<f64> = (1..=m).map(|r| scheme.raw_weight(r, m)).collect();
    let total: f64 = w.iter().sum();
    if !(total > 0.0) {
        return Err(CiesError::invalid(format!(
            "scheme {} produced no weight mass",
            scheme.name()
        )));
    }
    Ok(w[..t].iter().sum::<f64>() / total)
}

/// How many times more mass the top `t` ranks hold than under equal weights.
pub fn concentration_factor(scheme: &dyn RankWeighting, m: usize, t: usize) -> Result<f64> {
    if t == 0 {
        return Err(CiesError::invalid("concentration over zero ranks"));
    }
    Ok(top_mass(scheme, m, t)? * m as f64 / t as f64)
}

/// Serializable description of a scheme, as it appears in run configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightSchemeSpec {
    Harmonic,
    Exponential {
        #[serde(default = "default_alpha")]
        alpha: f64,
    },
    #[serde(alias = "log")]
    Logarithmic,
    #[serde(alias = "topk")]
    TopK {
        #[serde(default = "default_k")]
        k: usize,
    },
    Uniform,
}

fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}

fn default_k() -> usize {
    DEFAULT_TOP_K
}

impl WeightSchemeSpec {
    pub fn build(&self) -> Box<dyn RankWeighting> {
        match *self {
            WeightSchemeSpec::Harmonic => Box::new(Harmonic),
            WeightSchemeSpec::Exponential { alpha } => Box::new(Exponential { alpha }),
            WeightSchemeSpec::Logarithmic => Box::new(Logarithmic),
            WeightSchemeSpec::TopK { k } => Box::new(TopK { k }),
            WeightSchemeSpec::Uniform => Box::new(Uniform),
        }
    }

    /// The five schemes with their default parameters, harmonic first.
    pub fn all() -> Vec<WeightSchemeSpec> {
        vec![
            WeightSchemeSpec::Harmonic,
            WeightSchemeSpec::Exponential {
                alpha: DEFAULT_ALPHA,
            },
            WeightSchemeSpec::Logarithmic,
            WeightSchemeSpec::TopK { k: DEFAULT_TOP_K },
            WeightSchemeSpec::Uniform,
        ]
    }

    pub fn name(&self) -> &'static str {
        self.build().name()
    }
}

/// Parameters a scheme constructor may consume.
#[derive(Debug, Clone, Copy)]
pub struct SchemeParams {
    pub alpha: f64,
    pub k: usize,
}

impl Default for SchemeParams {
    fn default() -> Self {
        SchemeParams {
            alpha: DEFAULT_ALPHA,
            k: DEFAULT_TOP_K,
        }
    }
}

type SchemeFactory = fn(SchemeParams) -> WeightSchemeSpec;

/// Name-to-constructor table for weighting schemes.
pub struct SchemeRegistry {
    factories: BTreeMap<&'static str, SchemeFactory>,
}

impl SchemeRegistry {
    pub fn empty() -> Self {
        SchemeRegistry {
            factories: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, name: &'static str, factory: SchemeFactory) {
        self.factories.insert(name, factory);
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.factories.keys().copied()
    }

    pub fn lookup(&self, name: &str, params: SchemeParams) -> Result<WeightSchemeSpec> {
        let key = name.trim().to_ascii_lowercase();
        self.factories
            .get(key.as_str())
            .map(|f| f(params))
            .ok_or_else(|| CiesError::invalid(format!("unknown weighting scheme `{name}`")))
    }

    /// Resolves a CLI-style selector: a scheme name or `all`.
    pub fn select(&self, selector: &str, params: SchemeParams) -> Result<Vec<WeightSchemeSpec>> {
        if selector.eq_ignore_ascii_case("all") {
            return Ok(WeightSchemeSpec::all()
                .into_iter()
                .map(|s| match s {
                    WeightSchemeSpec::Exponential { .. } => WeightSchemeSpec::Exponential {
                        alpha: params.alpha,
                    },
                    WeightSchemeSpec::TopK { .. } => WeightSchemeSpec::TopK { k: params.k },
                    other => other,
                })
                .collect());
        }
        Ok(vec![self.lookup(selector, params)?])
    }
}

impl Default for SchemeRegistry {
    fn default() -> Self {
        let mut reg = SchemeRegistry::empty();
        reg.register("harmonic", |_| WeightSchemeSpec::Harmonic);
        reg.register("exponential", |p| WeightSchemeSpec::Exponential {
            alpha: p.alpha,
        });
        reg.register("exp", |p| WeightSchemeSpec::Exponential { alpha: p.alpha });
        reg.register("log", |_| WeightSchemeSpec::Logarithmic);
        reg.register("logarithmic", |_| WeightSchemeSpec::Logarithmic);
        reg.register("topk", |p| WeightSchemeSpec::TopK { k: p.k });
        reg.register("top_k", |p| WeightSchemeSpec::TopK { k: p.k });
        reg.register("uniform", |_| WeightSchemeSpec::Uniform);
        reg
    }
}
