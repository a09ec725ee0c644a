//! Report structures and writers. Everything written to the main report is a
//! pure function of the configuration and the input bytes; wall-clock timings
//! go to a separate file.

use std::path::Path;

use cies_core::rng::{derive_seed, tag};
use cies_core::stats::{
    bootstrap_ci, spearman_rho, wilcoxon_signed_rank, BootstrapCi, WilcoxonResult,
};
use cies_core::{aggregate_scores, CiesError, ScoreSummary, WeightSchemeSpec};
use cies_models::FeatureMeta;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{HarnessError, Result};
use crate::pipeline::{ConfigurationFailure, ConfigurationRun, InstanceFailure, Prepared};

/// Slack allowed when comparing a score against its Lipschitz lower bound.
pub const BOUND_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetSummary {
    pub n_rows: usize,
    pub features: Vec<FeatureMeta>,
    pub n_train: usize,
    pub n_test: usize,
    pub positive_rate: f64,
    pub n_instances: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionSummary {
    pub condition: String,
    pub n_train: usize,
    pub class_counts: [usize; 2],
    pub n_synthetic: usize,
    pub warning: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchemeReport {
    pub scheme: WeightSchemeSpec,
    pub summary: Option<ScoreSummary>,
    pub bootstrap: Option<BootstrapCi>,
    /// Paired test of this scheme's scores against the baseline scores.
    pub wilcoxon: Option<WilcoxonResult>,
    pub wilcoxon_note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCheck {
    pub checked: usize,
    pub violations: usize,
    /// Smallest `score - bound` over checked instances.
    pub min_slack: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Confound {
    pub rho: Option<f64>,
    pub shared_variance: Option<f64>,
    pub note: Option<String>,
    pub mean_jaccard: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigurationReport {
    pub model: String,
    pub condition: String,
    pub explainer: String,
    pub epsilon: f64,
    pub accuracy: f64,
    pub f1: f64,
    pub n_instances: usize,
    pub n_failed: usize,
    pub schemes: Vec<SchemeReport>,
    pub baseline: Option<ScoreSummary>,
    pub baseline_bootstrap: Option<BootstrapCi>,
    pub lipschitz_max: Option<ScoreSummary>,
    pub lipschitz_mean: Option<ScoreSummary>,
    pub bound_check: BoundCheck,
    pub pred_stab: Option<ScoreSummary>,
    pub confound: Confound,
    pub failures: Vec<InstanceFailure>,
}

impl ConfigurationReport {
    /// Mean score of the first configured scheme.
    pub fn primary_mean(&self) -> Option<f64> {
        self.schemes.first()?.summary.as_ref().map(|s| s.mean)
    }

    pub fn scheme_mean(&self, name: &str) -> Option<f64> {
        self.schemes
            .iter()
            .find(|s| s.scheme.name() == name)?
            .summary
            .as_ref()
            .map(|s| s.mean)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    pub data_sha256: Option<String>,
    pub config: RunConfig,
    pub dataset: DatasetSummary,
    pub conditions: Vec<ConditionSummary>,
    pub configurations: Vec<ConfigurationReport>,
    pub failures: Vec<ConfigurationFailure>,
    pub notes: Vec<String>,
}

impl RunReport {
    pub fn find(&self, model: &str, condition: &str) -> Option<&ConfigurationReport> {
        self.configurations
            .iter()
            .find(|c| c.model == model && c.condition == condition)
    }

    pub fn bound_violations(&self) -> usize {
        self.configurations
            .iter()
            .map(|c| c.bound_check.violations)
            .sum()
    }
}

fn summary(values: &[f64]) -> Option<ScoreSummary> {
    aggregate_scores(values).ok()
}

pub fn bound_check(pairs: impl Iterator<Item = (f64, Option<f64>)>) -> BoundCheck {
    let mut checked = 0;
    let mut violations = 0;
    let mut min_slack: Option<f64> = None;
    for (score, bound) in pairs {
        let Some(b) = bound else { continue };
        checked += 1;
        let slack = score - b;
        if slack < -BOUND_TOLERANCE {
            violations += 1;
        }
        min_slack = Some(min_slack.map_or(slack, |m| m.min(slack)));
    }
    BoundCheck {
        checked,
        violations,
        min_slack,
    }
}

pub fn confound(cies: &[f64], pred_stab: &[f64], jaccard: &[f64]) -> Confound {
    let mean_jaccard =
        (!jaccard.is_empty()).then(|| jaccard.iter().sum::<f64>() / jaccard.len() as f64);
    match spearman_rho(cies, pred_stab) {
        Ok(rho) => Confound {
            rho: Some(rho),
            shared_variance: Some(rho * rho),
            note: None,
            mean_jaccard,
        },
        Err(e) => Confound {
            rho: None,
            shared_variance: None,
            note: Some(e.to_string()),
            mean_jaccard,
        },
    }
}

pub fn configuration_report(cfg: &RunConfig, run: &ConfigurationRun) -> ConfigurationReport {
    let recs = &run.records;
    let baseline: Vec<f64> = recs.iter().map(|r| r.scores.baseline).collect();
    let boot_seed = derive_seed(&[cfg.seed, tag::BOOTSTRAP]);
    let boot =
        |v: &[f64]| bootstrap_ci(v, cfg.bootstrap_resamples, cfg.confidence_level, boot_seed).ok();
    let schemes = cfg
        .schemes
        .iter()
        .enumerate()
        .map(|(i, spec)| {
            let scores: Vec<f64> = recs.iter().map(|r| r.scores.cies[i]).collect();
            let (wilcoxon, wilcoxon_note) = if scores.is_empty() {
                (None, Some(CiesError::EmptySample.to_string()))
            } else {
                match wilcoxon_signed_rank(&scores, &baseline) {
                    Ok(w) => (Some(w), None),
                    Err(e) => (None, Some(e.to_string())),
                }
            };
            SchemeReport {
                scheme: spec.clone(),
                summary: summary(&scores),
                bootstrap: boot(&scores),
                wilcoxon,
                wilcoxon_note,
            }
        })
        .collect();
    let lmax: Vec<f64> = recs.iter().filter_map(|r| r.scores.lipschitz_max).collect();
    let lmean: Vec<f64> = recs
        .iter()
        .filter_map(|r| r.scores.lipschitz_mean)
        .collect();
    let primary: Vec<f64> = recs.iter().map(|r| r.scores.cies[0]).collect();
    let pred_stab: Vec<f64> = recs.iter().map(|r| r.scores.pred_stab).collect();
    let jaccard: Vec<f64> = recs.iter().map(|r| r.scores.jaccard).collect();
    ConfigurationReport {
        model: run.model.clone(),
        condition: run.condition.clone(),
        explainer: run.explainer.clone(),
        epsilon: run.epsilon,
        accuracy: run.accuracy,
        f1: run.f1,
        n_instances: recs.len(),
        n_failed: run.failures.len(),
        schemes,
        baseline: summary(&baseline),
        baseline_bootstrap: boot(&baseline),
        lipschitz_max: summary(&lmax),
        lipschitz_mean: summary(&lmean),
        bound_check: bound_check(recs.iter().map(|r| (r.scores.cies[0], r.scores.bound))),
        pred_stab: summary(&pred_stab),
        confound: confound(&primary, &pred_stab, &jaccard),
        failures: run.failures.clone(),
    }
}

pub fn dataset_summary(p: &Prepared) -> DatasetSummary {
    let pos = p.raw.labels.iter().filter(|&&y| y == 1).count();
    DatasetSummary {
        n_rows: p.raw.len(),
        features: p.raw.meta.clone(),
        n_train: p.train.len(),
        n_test: p.test.len(),
        positive_rate: pos as f64 / p.raw.len() as f64,
        n_instances: p.sample.len(),
    }
}

pub fn condition_summaries(p: &Prepared) -> Vec<ConditionSummary> {
    p.conditions
        .iter()
        .map(|c| ConditionSummary {
            condition: c.condition.name().to_string(),
            n_train: c.train.len(),
            class_counts: c.train.class_counts(),
            n_synthetic: c.n_synthetic,
            warning: c.warning.clone(),
        })
        .collect()
}

pub fn build_report(
    cfg: &RunConfig,
    p: &Prepared,
    runs: &[ConfigurationRun],
    failures: Vec<ConfigurationFailure>,
) -> RunReport {
    RunReport {
        tool: "cies".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config_hash: cfg.hash(),
        seed: cfg.seed,
        data_sha256: p.data_sha256.clone(),
        // the output location does not affect any result
        config: RunConfig {
            out_dir: Default::default(),
            ..cfg.clone()
        },
        dataset: dataset_summary(p),
        conditions: condition_summaries(p),
        configurations: runs.iter().map(|r| configuration_report(cfg, r)).collect(),
        failures,
        notes: p.notes.clone(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuntimeEntry {
    pub model: String,
    pub condition: String,
    pub explainer: String,
    pub instances: usize,
    pub mean_secs: f64,
    pub max_secs: f64,
}

pub fn runtime_entries(runs: &[ConfigurationRun]) -> Vec<RuntimeEntry> {
    runs.iter()
        .map(|r| {
            let t: Vec<f64> = r.records.iter().map(|x| x.runtime_secs).collect();
            RuntimeEntry {
                model: r.model.clone(),
                condition: r.condition.clone(),
                explainer: r.explainer.clone(),
                instances: t.len(),
                mean_secs: if t.is_empty() {
                    0.0
                } else {
                    t.iter().sum::<f64>() / t.len() as f64
                },
                max_secs: t.iter().copied().fold(0.0, f64::max),
            }
        })
        .collect()
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, to_json(value)).map_err(|e| HarnessError::io(path, e))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes rows of string cells as CSV.
pub fn write_table(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let err = |e: csv::Error| HarnessError::Data(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(r).map_err(err)?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

/// Flat per-instance score table.
pub fn instance_table(
    cfg: &RunConfig,
    runs: &[ConfigurationRun],
) -> (Vec<String>, Vec<Vec<String>>) {
    let mut header: Vec<String> = [
        "model",
        "condition",
        "explainer",
        "epsilon",
        "instance_id",
        "label",
        "prediction",
    ]
    .map(String::from)
    .to_vec();
    header.extend(cfg.schemes.iter().map(|s| format!("cies_{}", s.name())));
    header.extend(
        [
            "baseline",
            "lipschitz_max",
            "lipschitz_mean",
            "bound",
            "delta_bar",
            "pred_stab",
            "jaccard",
        ]
        .map(String::from),
    );
    let mut rows = Vec::new();
    for run in runs {
        for r in &run.records {
            let s = &r.scores;
            let mut row = vec![
                run.model.clone(),
                run.condition.clone(),
                run.explainer.clone(),
                run.epsilon.to_string(),
                r.instance_id.to_string(),
                r.label.to_string(),
                r.prediction.to_string(),
            ];
            row.extend(s.cies.iter().map(f64::to_string));
            row.extend([
                s.baseline.to_string(),
                fmt_opt(s.lipschitz_max),
                fmt_opt(s.lipschitz_mean),
                fmt_opt(s.bound),
                s.delta_bar.to_string(),
                s.pred_stab.to_string(),
                s.jaccard.to_string(),
            ]);
            rows.push(row);
        }
    }
    (header, rows)
}
