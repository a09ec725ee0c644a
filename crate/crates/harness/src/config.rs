//! Run configuration: a TOML document with defaults for every field.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use cies_core::WeightSchemeSpec;
use cies_models::models::{ForestParams, GbtParams};
use cies_models::{ExplainerSpec, FeatureKind, ModelSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CsvSource {
    pub path: PathBuf,
    pub target: String,
    /// Target value mapped to 1. Without it, the larger of two numeric
    /// labels (or the lexicographically larger string) is positive.
    pub positive_label: Option<String>,
    pub overrides: BTreeMap<String, FeatureKind>,
    pub delimiter: char,
}

impl Default for CsvSource {
    fn default() -> Self {
        CsvSource {
            path: PathBuf::new(),
            target: "target".into(),
            positive_label: None,
            overrides: BTreeMap::new(),
            delimiter: ',',
        }
    }
}

/// Two-class Gaussian mixture with class imbalance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub n_rows: usize,
    pub n_numerical: usize,
    /// Leading numerical features whose mean shifts with the class.
    pub n_informative: usize,
    pub n_categorical: usize,
    pub positive_fraction: f64,
    /// Mean shift of the first informative feature, in units of its std.
    pub separation: f64,
    pub missing_fraction: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_rows: 1000,
            n_numerical: 7,
            n_informative: 4,
            n_categorical: 1,
            positive_fraction: 0.3,
            separation: 1.5,
            missing_fraction: 0.0,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum DatasetSource {
    Csv(CsvSource),
    Synthetic(SyntheticSpec),
}

impl Default for DatasetSource {
    fn default() -> Self {
        DatasetSource::Synthetic(SyntheticSpec::default())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    Raw,
    Smote,
}

impl Condition {
    pub fn name(self) -> &'static str {
        match self {
            Condition::Raw => "raw",
            Condition::Smote => "smote",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: DatasetSource,
    pub conditions: Vec<Condition>,
    pub models: Vec<ModelSpec>,
    pub explainer: ExplainerSpec,
    pub epsilon: f64,
    pub neighbors: usize,
    pub instances: usize,
    pub schemes: Vec<WeightSchemeSpec>,
    pub seed: u64,
    /// Where reports are written; not part of the configuration hash.
    pub out_dir: PathBuf,
    pub test_fraction: f64,
    pub smote_k: usize,
    pub background_size: usize,
    pub bootstrap_resamples: usize,
    pub confidence_level: f64,
    pub jaccard_k: usize,
    /// Sample test instances per class in proportion to the test split.
    pub stratified_instances: bool,
    pub sweep_grid: Vec<f64>,
    pub replicates: usize,
    pub convergence_neighbors: Vec<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dataset: DatasetSource::default(),
            conditions: vec![Condition::Raw],
            models: vec![
                ModelSpec::Forest(ForestParams::default()),
                ModelSpec::Gbt(GbtParams::default()),
            ],
            explainer: ExplainerSpec::default(),
            epsilon: 0.03,
            neighbors: 20,
            instances: 100,
            schemes: vec![WeightSchemeSpec::Harmonic],
            seed: 42,
            out_dir: PathBuf::from("cies-out"),
            test_fraction: 0.2,
            smote_k: 5,
            background_size: 32,
            bootstrap_resamples: 10_000,
            confidence_level: 0.95,
            jaccard_k: 3,
            stratified_instances: false,
            sweep_grid: vec![0.01, 0.03, 0.05, 0.10],
            replicates: 30,
            convergence_neighbors: vec![5, 10, 20, 40],
        }
    }
}

fn config_err(msg: impl Into<String>) -> HarnessError {
    HarnessError::Config(msg.into())
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let mut cfg = Self::from_toml_str(&text)?;
        // relative data paths are resolved against the config file
        if let DatasetSource::Csv(csv) = &mut cfg.dataset {
            if csv.path.is_relative() {
                if let Some(dir) = path.parent() {
                    csv.path = dir.join(&csv.path);
                }
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(config_err(format!(
                "epsilon must be >= 0, got {}",
                self.epsilon
            )));
        }
        if self.neighbors == 0 || self.instances == 0 {
            return Err(config_err("neighbors and instances must be at least 1"));
        }
        if self.models.is_empty() || self.conditions.is_empty() || self.schemes.is_empty() {
            return Err(config_err(
                "models, conditions and schemes must be non-empty",
            ));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(config_err("test_fraction must lie in (0, 1)"));
        }
        if self.smote_k == 0 || self.background_size == 0 || self.jaccard_k == 0 {
            return Err(config_err(
                "smote_k, background_size and jaccard_k must be at least 1",
            ));
        }
        if self.bootstrap_resamples == 0
            || !(self.confidence_level > 0.0 && self.confidence_level < 1.0)
        {
            return Err(config_err(
                "bootstrap needs >= 1 resample and a level in (0, 1)",
            ));
        }
        if self.sweep_grid.is_empty()
            || self
                .sweep_grid
                .iter()
                .any(|e| !(*e >= 0.0 && e.is_finite()))
            || self.sweep_grid.windows(2).any(|w| w[1] < w[0])
        {
            return Err(config_err(
                "sweep_grid must be a non-empty ascending list of values >= 0",
            ));
        }
        if self.replicates < 2 || self.convergence_neighbors.contains(&0) {
            return Err(config_err(
                "replicates must be >= 2 and convergence sizes >= 1",
            ));
        }
        if let DatasetSource::Synthetic(s) = &self.dataset {
            if s.n_informative > s.n_numerical || s.n_numerical + s.n_categorical == 0 {
                return Err(config_err(
                    "synthetic data needs n_informative <= n_numerical and M >= 1",
                ));
            }
            if !(s.positive_fraction > 0.0 && s.positive_fraction < 1.0)
                || !(0.0..1.0).contains(&s.missing_fraction)
            {
                return Err(config_err("synthetic fractions must lie in (0, 1)"));
            }
        }
        if let DatasetSource::Csv(c) = &self.dataset {
            if c.target.is_empty() {
                return Err(config_err("csv source needs a target column"));
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, excluding the output directory.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.out_dir = PathBuf::new();
        let json = serde_json::to_string(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_the_documented_values() {
        let cfg = RunConfig::from_toml_str("").unwrap();
        assert_eq!((cfg.epsilon, cfg.neighbors, cfg.instances), (0.03, 20, 100));
        assert_eq!(cfg.sweep_grid, vec![0.01, 0.03, 0.05, 0.10]);
        assert_eq!(cfg.schemes, vec![WeightSchemeSpec::Harmonic]);
    }

    #[test]
    fn parses_nested_specs() {
        let cfg = RunConfig::from_toml_str(
            r#"
            epsilon = 0.05
            conditions = ["raw", "smote"]
            schemes = [{ kind = "harmonic" }, { kind = "top_k", k = 3 }]

            [dataset]
            source = "csv"
            path = "data.csv"
            target = "default"
            overrides = { zip = "categorical" }

            [[models]]
            kind = "gbt"
            n_rounds = 10

            [explainer]
            kind = "linear_surrogate"
            n_samples = 200
            "#,
        )
        .unwrap();
        assert_eq!(cfg.conditions, vec![Condition::Raw, Condition::Smote]);
        assert_eq!(
            cfg.models,
            vec![ModelSpec::Gbt(GbtParams {
                n_rounds: 10,
                ..Default::default()
            })]
        );
        assert_eq!(cfg.schemes[1], WeightSchemeSpec::TopK { k: 3 });
        let DatasetSource::Csv(csv) = &cfg.dataset else {
            panic!()
        };
        assert_eq!(csv.overrides["zip"], FeatureKind::Categorical);
    }

    #[test]
    fn rejects_invalid_values() {
        assert!(RunConfig::from_toml_str("epsilon = -0.1").is_err());
        assert!(RunConfig::from_toml_str("neighbors = 0").is_err());
        assert!(RunConfig::from_toml_str("sweep_grid = [0.1, 0.05]").is_err());
        assert!(RunConfig::from_toml_str("bogus = 1").is_err());
    }

    #[test]
    fn hash_ignores_output_directory() {
        let a = RunConfig::default();
        let b = RunConfig {
            out_dir: "elsewhere".into(),
            ..RunConfig::default()
        };
        let c = RunConfig {
            seed: 1,
            ..RunConfig::default()
        };
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
    }
}
