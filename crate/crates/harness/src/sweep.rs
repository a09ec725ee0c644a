//! Noise-level sweep with shared base draws.
//!
//! Neighbor `k` of an instance is `x + eps * sigma(x) * z_k` with the same `z_k`
//! at every level, so the mean perturbation size is linear in `eps`. The
//! explanation of `x` and its rank weights do not depend on `eps` at all.
//! The Lipschitz bound is evaluated with one constant per instance, the
//! largest estimate over the positive levels of the grid, which makes it
//! non-increasing along the grid.

use std::path::Path;

use cies_core::stats::lipschitz_lower_bound;
use cies_core::summary::{mean, population_std};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::Result;
use crate::pipeline::{
    explain_neighborhood, neighbor_seed, prepare, score_explained, train_all, Scores,
};
use crate::report::{ensure_dir, write_json, write_table, BOUND_TOLERANCE};

/// Allowed increase of mean CIES between consecutive grid levels.
pub const MEAN_TOLERANCE: f64 = 0.005;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub model: String,
    pub condition: String,
    pub explainer: String,
    pub epsilon: f64,
    pub n: usize,
    pub mean_cies: f64,
    pub std_cies: f64,
    pub mean_baseline: f64,
    pub mean_bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepMonotonicity {
    pub model: String,
    pub condition: String,
    pub explainer: String,
    pub instances: usize,
    /// Consecutive-level pairs where an instance's bound went up.
    pub bound_violations: usize,
    pub bound_pairs_checked: usize,
    /// Instances whose score fell below the fixed-constant bound at some level.
    pub bound_breaches: usize,
    pub max_mean_increase: f64,
    pub mean_non_increasing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub config_hash: String,
    pub seed: u64,
    pub grid: Vec<f64>,
    pub rows: Vec<SweepRow>,
    pub monotonicity: Vec<SweepMonotonicity>,
    pub failures: Vec<String>,
}

impl SweepReport {
    pub fn bound_violations(&self) -> usize {
        self.monotonicity
            .iter()
            .map(|m| m.bound_violations + m.bound_breaches)
            .sum()
    }
}

struct InstanceSweep {
    instance_id: usize,
    scores: Vec<Scores>,
    fixed_bounds: Vec<Option<f64>>,
}

pub fn epsilon_sweep(cfg: &RunConfig) -> Result<SweepReport> {
    let p = prepare(cfg)?;
    let (trained, train_failures) = train_all(cfg, &p, &cfg.explainer);
    let grid = cfg.sweep_grid.clone();
    let mut rows = Vec::new();
    let mut monotonicity = Vec::new();
    let mut failures: Vec<String> = train_failures
        .iter()
        .map(|f| format!("{} / {}: {}", f.model, f.condition, f.error))
        .collect();

    for t in &trained {
        let mut per_instance = Vec::new();
        for &pos in &p.sample {
            let id = p.test_ids[pos];
            let x = &p.test.rows[pos];
            let scored: Result<Vec<Scores>> = grid
                .iter()
                .map(|&eps| {
                    let e = explain_neighborhood(
                        t,
                        x,
                        &p.numeric_mask,
                        eps,
                        cfg.neighbors,
                        neighbor_seed(cfg, id),
                    )?;
                    score_explained(&e, &cfg.schemes, cfg.jaccard_k)
                })
                .collect();
            let scores = match scored {
                Ok(s) => s,
                Err(e) => {
                    failures.push(format!(
                        "{} / {} instance {id}: {e}",
                        t.model_name,
                        t.condition.name()
                    ));
                    continue;
                }
            };
            let l_fixed = scores
                .iter()
                .filter_map(|s| s.lipschitz_max)
                .fold(None, |acc: Option<f64>, l| {
                    Some(acc.map_or(l, |a| a.max(l)))
                });
            let fixed_bounds = scores
                .iter()
                .map(|s| {
                    l_fixed.and_then(|l| {
                        lipschitz_lower_bound(
                            l,
                            &s.primary.weights,
                            s.delta_bar,
                            s.primary.weighted_magnitude,
                        )
                        .ok()
                    })
                })
                .collect();
            per_instance.push(InstanceSweep {
                instance_id: id,
                scores,
                fixed_bounds,
            });
        }

        let mut means = Vec::with_capacity(grid.len());
        for (g, &eps) in grid.iter().enumerate() {
            let cies: Vec<f64> = per_instance.iter().map(|s| s.scores[g].cies[0]).collect();
            let base: Vec<f64> = per_instance.iter().map(|s| s.scores[g].baseline).collect();
            let bounds: Vec<f64> = per_instance
                .iter()
                .filter_map(|s| s.fixed_bounds[g])
                .collect();
            let m = mean(&cies).unwrap_or(f64::NAN);
            means.push(m);
            rows.push(SweepRow {
                model: t.model_name.to_string(),
                condition: t.condition.name().to_string(),
                explainer: t.explainer_name.to_string(),
                epsilon: eps,
                n: cies.len(),
                mean_cies: m,
                std_cies: population_std(&cies).unwrap_or(f64::NAN),
                mean_baseline: mean(&base).unwrap_or(f64::NAN),
                mean_bound: mean(&bounds).ok(),
            });
        }
        let mut bound_violations = 0;
        let mut bound_pairs_checked = 0;
        let mut bound_breaches = 0;
        for s in &per_instance {
            for w in s.fixed_bounds.windows(2) {
                if let (Some(a), Some(b)) = (w[0], w[1]) {
                    bound_pairs_checked += 1;
                    if b > a + BOUND_TOLERANCE {
                        bound_violations += 1;
                    }
                }
            }
            let breached = s
                .scores
                .iter()
                .zip(&s.fixed_bounds)
                .any(|(sc, b)| b.is_some_and(|b| sc.cies[0] < b - BOUND_TOLERANCE));
            if breached {
                log::warn!("bound breached for instance {}", s.instance_id);
                bound_breaches += 1;
            }
        }
        let max_mean_increase = means
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::NEG_INFINITY, f64::max);
        monotonicity.push(SweepMonotonicity {
            model: t.model_name.to_string(),
            condition: t.condition.name().to_string(),
            explainer: t.explainer_name.to_string(),
            instances: per_instance.len(),
            bound_violations,
            bound_pairs_checked,
            bound_breaches,
            max_mean_increase: if max_mean_increase.is_finite() {
                max_mean_increase
            } else {
                0.0
            },
            mean_non_increasing: means.windows(2).all(|w| w[1] <= w[0] + MEAN_TOLERANCE),
        });
    }
    Ok(SweepReport {
        config_hash: cfg.hash(),
        seed: cfg.seed,
        grid,
        rows,
        monotonicity,
        failures,
    })
}

pub fn write_sweep(report: &SweepReport, dir: &Path) -> Result<()> {
    ensure_dir(dir)?;
    write_json(&dir.join("sweep.json"), report)?;
    let header = ["epsilon", "model", "condition", "explainer", "mean", "std"].map(String::from);
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            vec![
                r.epsilon.to_string(),
                r.model.clone(),
                r.condition.clone(),
                r.explainer.clone(),
                r.mean_cies.to_string(),
                r.std_cies.to_string(),
            ]
        })
        .collect();
    write_table(&dir.join("sweep_plot.csv"), &header, &rows)
}
