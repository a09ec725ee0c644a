//! Checks of the score's analytical guarantees on a concrete run.

use std::path::Path;

use cies_core::rng::{derive_seed, tag};
use cies_core::summary::{mean, population_std};
use cies_core::weighting::{Harmonic, Uniform};
use cies_core::{concentration_factor, top_mass};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::Result;
use crate::pipeline::{
    evaluate_configuration, explain_neighborhood, prepare, score_explained, train_all,
    ConfigurationRun, Prepared, Trained,
};
use crate::report::{bound_check, ensure_dir, write_json, write_table, BoundCheck};
use crate::run::check_ranges;

pub const WEIGHT_TABLE_SIZES: [usize; 4] = [5, 10, 20, 31];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RangeCheck {
    pub cies_checked: usize,
    pub cies_in_range: usize,
    pub baseline_checked: usize,
    pub baseline_in_range: usize,
}

impl RangeCheck {
    pub fn all_in_range(&self) -> bool {
        self.cies_checked == self.cies_in_range && self.baseline_checked == self.baseline_in_range
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub instances: usize,
    pub exact_ones: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundPair {
    pub model: String,
    pub condition: String,
    pub instance_id: usize,
    pub bound: f64,
    pub cies: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightRow {
    pub m: usize,
    pub t: usize,
    pub harmonic: f64,
    pub uniform: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergencePoint {
    pub k: usize,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Convergence {
    pub model: String,
    pub condition: String,
    pub instance_id: usize,
    pub replicates: usize,
    pub points: Vec<ConvergencePoint>,
    /// `std(K=40) / std(K=10)` when both are present and the latter is positive.
    pub std_ratio_40_10: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub config_hash: String,
    pub seed: u64,
    pub range: RangeCheck,
    pub identity: IdentityCheck,
    pub bound: BoundCheck,
    pub bound_pairs: Vec<BoundPair>,
    pub weight_table: Vec<WeightRow>,
    pub convergence: Option<Convergence>,
    pub notes: Vec<String>,
}

impl VerifyReport {
    /// True when a guarantee that must hold exactly was broken.
    pub fn has_violations(&self) -> bool {
        !self.range.all_in_range()
            || self.identity.exact_ones != self.identity.instances
            || self.bound.violations > 0
    }
}

pub fn weight_table() -> Vec<WeightRow> {
    let mut rows = Vec::new();
    for m in WEIGHT_TABLE_SIZES {
        for t in 1..=m {
            let harmonic = top_mass(&Harmonic, m, t).expect("valid sizes");
            rows.push(WeightRow {
                m,
                t,
                harmonic,
                uniform: top_mass(&Uniform, m, t).expect("valid sizes"),
                ratio: concentration_factor(&Harmonic, m, t).expect("valid sizes"),
            });
        }
    }
    rows
}

fn range_check(runs: &[ConfigurationRun]) -> RangeCheck {
    let unit = |v: f64| (0.0..=1.0).contains(&v);
    let mut c = RangeCheck {
        cies_checked: 0,
        cies_in_range: 0,
        baseline_checked: 0,
        baseline_in_range: 0,
    };
    for r in runs.iter().flat_map(|r| &r.records) {
        c.cies_checked += r.scores.cies.len();
        c.cies_in_range += r.scores.cies.iter().filter(|&&v| unit(v)).count();
        c.baseline_checked += 1;
        c.baseline_in_range += usize::from(unit(r.scores.baseline));
    }
    c
}

/// Standard deviation of the score of one instance over re-seeded
/// neighborhoods, for each neighborhood size in `cfg.convergence_neighbors`.
pub fn convergence(cfg: &RunConfig, p: &Prepared, t: &Trained, pos: usize) -> Result<Convergence> {
    let id = p.test_ids[pos];
    let x = &p.test.rows[pos];
    let k_max = cfg.convergence_neighbors.iter().copied().max().unwrap_or(0);
    let mut per_k: Vec<Vec<f64>> =
        vec![Vec::with_capacity(cfg.replicates); cfg.convergence_neighbors.len()];
    for r in 0..cfg.replicates {
        let seed = derive_seed(&[cfg.seed, tag::REPLICATE, r as u64, id as u64]);
        let full = explain_neighborhood(t, x, &p.numeric_mask, cfg.epsilon, k_max, seed)?;
        for (slot, &k) in per_k.iter_mut().zip(&cfg.convergence_neighbors) {
            slot.push(score_explained(&full.prefix(k), &cfg.schemes, cfg.jaccard_k)?.cies[0]);
        }
    }
    let points: Vec<ConvergencePoint> = cfg
        .convergence_neighbors
        .iter()
        .zip(&per_k)
        .map(|(&k, v)| {
            Ok(ConvergencePoint {
                k,
                mean: mean(v)?,
                std: population_std(v)?,
            })
        })
        .collect::<Result<_>>()?;
    let std_at = |k: usize| points.iter().find(|p| p.k == k).map(|p| p.std);
    let std_ratio_40_10 = match (std_at(40), std_at(10)) {
        (Some(a), Some(b)) if b > 0.0 => Some(a / b),
        _ => None,
    };
    Ok(Convergence {
        model: t.model_name.to_string(),
        condition: t.condition.name().to_string(),
        instance_id: id,
        replicates: cfg.replicates,
        points,
        std_ratio_40_10,
    })
}

pub fn verify(cfg: &RunConfig) -> Result<VerifyReport> {
    let p = prepare(cfg)?;
    let (trained, failures) = train_all(cfg, &p, &cfg.explainer);
    let mut notes: Vec<String> = failures
        .iter()
        .map(|f| format!("{} / {} not trained: {}", f.model, f.condition, f.error))
        .collect();

    let runs: Vec<ConfigurationRun> = trained
        .iter()
        .map(|t| evaluate_configuration(cfg, &p, t, cfg.epsilon, cfg.neighbors))
        .collect();
    let range = range_check(&runs);
    if let Err(e) = check_ranges(&runs) {
        notes.push(e.to_string());
    }

    let mut identity = IdentityCheck {
        instances: 0,
        exact_ones: 0,
        failures: 0,
    };
    for t in &trained {
        let run = evaluate_configuration(cfg, &p, t, 0.0, cfg.neighbors);
        identity.failures += run.failures.len();
        for r in &run.records {
            identity.instances += 1;
            identity.exact_ones += usize::from(r.scores.cies.iter().all(|&v| v == 1.0));
        }
    }

    let bound_pairs: Vec<BoundPair> = runs
        .iter()
        .flat_map(|run| {
            run.records.iter().filter_map(move |r| {
                r.scores.bound.map(|bound| BoundPair {
                    model: run.model.clone(),
                    condition: run.condition.clone(),
                    instance_id: r.instance_id,
                    bound,
                    cies: r.scores.cies[0],
                })
            })
        })
        .collect();
    let bound = bound_check(bound_pairs.iter().map(|b| (b.cies, Some(b.bound))));

    // The first sampled instance of the first forest configuration, or of the
    // first configuration when no forest was trained.
    let target = trained
        .iter()
        .find(|t| t.model_name == "forest")
        .or_else(|| trained.first());
    let convergence = match (target, p.sample.first()) {
        (Some(t), Some(&pos)) => match convergence(cfg, &p, t, pos) {
            Ok(c) => Some(c),
            Err(e) => {
                notes.push(format!("convergence check failed: {e}"));
                None
            }
        },
        _ => None,
    };

    Ok(VerifyReport {
        config_hash: cfg.hash(),
        seed: cfg.seed,
        range,
        identity,
        bound,
        bound_pairs,
        weight_table: weight_table(),
        convergence,
        notes,
    })
}

pub fn write_verify(report: &VerifyReport, dir: &Path) -> Result<()> {
    ensure_dir(dir)?;
    write_json(&dir.join("verify.json"), report)?;
    let header = ["model", "condition", "instance_id", "bound", "cies"].map(String::from);
    let rows: Vec<Vec<String>> = report
        .bound_pairs
        .iter()
        .map(|b| {
            vec![
                b.model.clone(),
                b.condition.clone(),
                b.instance_id.to_string(),
                b.bound.to_string(),
                b.cies.to_string(),
            ]
        })
        .collect();
    write_table(&dir.join("bound_pairs.csv"), &header, &rows)
}
