//! Side-by-side comparison of the weighting schemes on the same run.

use std::path::Path;

use cies_core::stats::spearman_rho;
use cies_core::WeightSchemeSpec;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::Result;
use crate::report::{ensure_dir, write_json, write_table};
use crate::run::run_pipeline;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchemeMean {
    pub model: String,
    pub condition: String,
    pub explainer: String,
    pub scheme: String,
    pub mean: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchemePair {
    pub a: String,
    pub b: String,
    pub rho: Option<f64>,
    pub note: Option<String>,
}

/// Model rankings within one (condition, explainer) group.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchemeRanking {
    pub condition: String,
    pub explainer: String,
    /// Scheme name and model names ordered from most to least stable.
    pub rankings: Vec<(String, Vec<String>)>,
    pub identical: bool,
    pub pairs: Vec<SchemePair>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchemeReport {
    pub config_hash: String,
    pub seed: u64,
    pub schemes: Vec<WeightSchemeSpec>,
    pub means: Vec<SchemeMean>,
    pub rankings: Vec<SchemeRanking>,
    /// Largest gap between the uniform-scheme mean and the baseline mean.
    pub uniform_baseline_max_diff: Option<f64>,
}

impl SchemeReport {
    pub fn all_rankings_identical(&self) -> bool {
        self.rankings.iter().all(|r| r.identical)
    }
}

fn ranking(models: &[(String, f64)]) -> Vec<String> {
    let mut v = models.to_vec();
    v.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    v.into_iter().map(|(m, _)| m).collect()
}

pub fn weighting_comparison(cfg: &RunConfig) -> Result<SchemeReport> {
    let mut cfg = cfg.clone();
    cfg.schemes = WeightSchemeSpec::all();
    let out = run_pipeline(&cfg)?;
    let configs = &out.report.configurations;

    let mut means = Vec::new();
    let mut max_diff: Option<f64> = None;
    for c in configs {
        for s in &c.schemes {
            means.push(SchemeMean {
                model: c.model.clone(),
                condition: c.condition.clone(),
                explainer: c.explainer.clone(),
                scheme: s.scheme.name().to_string(),
                mean: s.summary.as_ref().map(|x| x.mean),
            });
        }
        if let (Some(u), Some(b)) = (c.scheme_mean("uniform"), c.baseline.as_ref()) {
            let d = (u - b.mean).abs();
            max_diff = Some(max_diff.map_or(d, |m| m.max(d)));
        }
    }

    let mut groups: Vec<(String, String)> = Vec::new();
    for c in configs {
        let key = (c.condition.clone(), c.explainer.clone());
        if !groups.contains(&key) {
            groups.push(key);
        }
    }
    let rankings = groups
        .into_iter()
        .map(|(condition, explainer)| {
            let members: Vec<_> = configs
                .iter()
                .filter(|c| c.condition == condition && c.explainer == explainer)
                .collect();
            let per_scheme: Vec<(String, Vec<(String, f64)>)> = cfg
                .schemes
                .iter()
                .map(|s| {
                    let name = s.name().to_string();
                    let vals = members
                        .iter()
                        .filter_map(|c| c.scheme_mean(&name).map(|m| (c.model.clone(), m)))
                        .collect();
                    (name, vals)
                })
                .collect();
            let rankings: Vec<(String, Vec<String>)> = per_scheme
                .iter()
                .map(|(n, v)| (n.clone(), ranking(v)))
                .collect();
            let identical = rankings.windows(2).all(|w| w[0].1 == w[1].1);
            let mut pairs = Vec::new();
            for i in 0..per_scheme.len() {
                for j in i + 1..per_scheme.len() {
                    let a: Vec<f64> = per_scheme[i].1.iter().map(|x| x.1).collect();
                    let b: Vec<f64> = per_scheme[j].1.iter().map(|x| x.1).collect();
                    let (rho, note) = match spearman_rho(&a, &b) {
                        Ok(r) => (Some(r), None),
                        Err(e) => (None, Some(e.to_string())),
                    };
                    pairs.push(SchemePair {
                        a: per_scheme[i].0.clone(),
                        b: per_scheme[j].0.clone(),
                        rho,
                        note,
                    });
                }
            }
            SchemeRanking {
                condition,
                explainer,
                rankings,
                identical,
                pairs,
            }
        })
        .collect();

    Ok(SchemeReport {
        config_hash: cfg.hash(),
        seed: cfg.seed,
        schemes: cfg.schemes.clone(),
        means,
        rankings,
        uniform_baseline_max_diff: max_diff,
    })
}

pub fn write_schemes(report: &SchemeReport, dir: &Path) -> Result<()> {
    ensure_dir(dir)?;
    write_json(&dir.join("schemes.json"), report)?;
    let header = ["model", "condition", "explainer", "scheme", "mean"].map(String::from);
    let rows: Vec<Vec<String>> = report
        .means
        .iter()
        .map(|m| {
            vec![
                m.model.clone(),
                m.condition.clone(),
                m.explainer.clone(),
                m.scheme.clone(),
                m.mean.map(|v| v.to_string()).unwrap_or_default(),
            ]
        })
        .collect();
    write_table(&dir.join("schemes.csv"), &header, &rows)
}
