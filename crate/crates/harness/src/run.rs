use std::path::Path;

use crate::config::RunConfig;
use crate::error::{HarnessError, Result};
use crate::pipeline::{evaluate_configuration, prepare, train_all, ConfigurationRun};
use crate::report::{
    build_report, ensure_dir, instance_table, runtime_entries, write_json, write_table, RunReport,
};

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: RunReport,
    pub runs: Vec<ConfigurationRun>,
}

/// Every configuration in `cfg`, evaluated at the configured noise level.
pub fn run_pipeline(cfg: &RunConfig) -> Result<RunOutput> {
    let p = prepare(cfg)?;
    let (trained, failures) = train_all(cfg, &p, &cfg.explainer);
    let runs: Vec<ConfigurationRun> = trained
        .iter()
        .map(|t| {
            log::info!(
                "evaluating {} / {} / {}",
                t.model_name,
                t.condition.name(),
                t.explainer_name
            );
            evaluate_configuration(cfg, &p, t, cfg.epsilon, cfg.neighbors)
        })
        .collect();
    check_ranges(&runs)?;
    let report = build_report(cfg, &p, &runs, failures);
    Ok(RunOutput { report, runs })
}

/// Scores outside `[0, 1]` mean a bug, not bad data.
pub fn check_ranges(runs: &[ConfigurationRun]) -> Result<()> {
    let unit = |v: f64| (0.0..=1.0).contains(&v);
    for run in runs {
        for r in &run.records {
            if !r.scores.cies.iter().all(|&v| unit(v)) || !unit(r.scores.baseline) {
                return Err(HarnessError::Invariant(format!(
                    "score outside [0, 1] for {} / {} instance {}",
                    run.model, run.condition, r.instance_id
                )));
            }
        }
    }
    Ok(())
}

pub fn write_run(cfg: &RunConfig, out: &RunOutput, dir: &Path) -> Result<()> {
    ensure_dir(dir)?;
    write_json(&dir.join("report.json"), &out.report)?;
    let (header, rows) = instance_table(cfg, &out.runs);
    write_table(&dir.join("instances.csv"), &header, &rows)?;
    write_json(&dir.join("runtime.json"), &runtime_entries(&out.runs))
}
