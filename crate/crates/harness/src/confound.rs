//! How much of the score tracks plain prediction smoothness.

use std::path::Path;

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::Result;
use crate::report::{ensure_dir, write_json, write_table, Confound};
use crate::run::run_pipeline;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfoundRow {
    pub model: String,
    pub condition: String,
    pub explainer: String,
    pub n: usize,
    pub confound: Confound,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScatterPoint {
    pub model: String,
    pub condition: String,
    pub instance_id: usize,
    pub cies: f64,
    pub pred_stab: f64,
    pub jaccard: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfoundReport {
    pub config_hash: String,
    pub seed: u64,
    pub rows: Vec<ConfoundRow>,
    /// Written to its own table.
    #[serde(skip)]
    pub scatter: Vec<ScatterPoint>,
}

pub fn confound_analysis(cfg: &RunConfig) -> Result<ConfoundReport> {
    let out = run_pipeline(cfg)?;
    let rows = out
        .report
        .configurations
        .iter()
        .map(|c| ConfoundRow {
            model: c.model.clone(),
            condition: c.condition.clone(),
            explainer: c.explainer.clone(),
            n: c.n_instances,
            confound: c.confound.clone(),
        })
        .collect();
    let scatter = out
        .runs
        .iter()
        .flat_map(|run| {
            run.records.iter().map(move |r| ScatterPoint {
                model: run.model.clone(),
                condition: run.condition.clone(),
                instance_id: r.instance_id,
                cies: r.scores.cies[0],
                pred_stab: r.scores.pred_stab,
                jaccard: r.scores.jaccard,
            })
        })
        .collect();
    Ok(ConfoundReport {
        config_hash: cfg.hash(),
        seed: cfg.seed,
        rows,
        scatter,
    })
}

pub fn write_confound(report: &ConfoundReport, dir: &Path) -> Result<()> {
    ensure_dir(dir)?;
    write_json(&dir.join("confound.json"), report)?;
    let header = [
        "model",
        "condition",
        "instance_id",
        "cies",
        "pred_stab",
        "jaccard",
    ]
    .map(String::from);
    let rows: Vec<Vec<String>> = report
        .scatter
        .iter()
        .map(|s| {
            vec![
                s.model.clone(),
                s.condition.clone(),
                s.instance_id.to_string(),
                s.cies.to_string(),
                s.pred_stab.to_string(),
                s.jaccard.to_string(),
            ]
        })
        .collect();
    write_table(&dir.join("confound_scatter.csv"), &header, &rows)
}
