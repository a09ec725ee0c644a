//! Statistics over an existing per-instance score table.

use std::path::Path;

use cies_core::rng::{derive_seed, tag};
use cies_core::stats::{
    bootstrap_ci, spearman_rho, wilcoxon_signed_rank, BootstrapCi, WilcoxonResult,
};
use serde::Serialize;

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableStats {
    pub column_a: String,
    pub column_b: String,
    pub n: usize,
    pub wilcoxon: Option<WilcoxonResult>,
    pub bootstrap_a: Option<BootstrapCi>,
    pub bootstrap_b: Option<BootstrapCi>,
    pub spearman: Option<f64>,
    pub notes: Vec<String>,
}

/// Reads two numeric columns. Rows with an empty cell in either are skipped.
pub fn read_columns(path: &Path, a: &str, b: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let bytes = std::fs::read(path).map_err(|e| HarnessError::io(path, e))?;
    let mut reader = csv::Reader::from_reader(bytes.as_slice());
    let header = reader
        .headers()
        .map_err(|e| HarnessError::Data(format!("{}: {e}", path.display())))?
        .clone();
    let col = |name: &str| {
        header.iter().position(|h| h == name).ok_or_else(|| {
            HarnessError::Data(format!("column `{name}` not found in {}", path.display()))
        })
    };
    let (ia, ib) = (col(a)?, col(b)?);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (i, rec) in reader.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| HarnessError::Data(format!("line {line}: {e}")))?;
        let (ca, cb) = (rec.get(ia).unwrap_or(""), rec.get(ib).unwrap_or(""));
        if ca.is_empty() || cb.is_empty() {
            continue;
        }
        let parse = |c: &str| {
            c.parse::<f64>()
                .map_err(|_| HarnessError::Data(format!("line {line}: `{c}` is not a number")))
        };
        xs.push(parse(ca)?);
        ys.push(parse(cb)?);
    }
    Ok((xs, ys))
}

fn keep<T>(r: cies_core::Result<T>, what: &str, notes: &mut Vec<String>) -> Option<T> {
    r.map_err(|e| notes.push(format!("{what}: {e}"))).ok()
}

pub fn table_stats(
    a_name: &str,
    b_name: &str,
    a: &[f64],
    b: &[f64],
    resamples: usize,
    level: f64,
    seed: u64,
) -> TableStats {
    let mut notes = Vec::new();
    let boot_seed = derive_seed(&[seed, tag::BOOTSTRAP]);
    let wilcoxon = keep(wilcoxon_signed_rank(a, b), "wilcoxon", &mut notes);
    let bootstrap_a = keep(
        bootstrap_ci(a, resamples, level, boot_seed),
        a_name,
        &mut notes,
    );
    let bootstrap_b = keep(
        bootstrap_ci(b, resamples, level, boot_seed),
        b_name,
        &mut notes,
    );
    let spearman = keep(spearman_rho(a, b), "spearman", &mut notes);
    TableStats {
        column_a: a_name.to_string(),
        column_b: b_name.to_string(),
        n: a.len(),
        wilcoxon,
        bootstrap_a,
        bootstrap_b,
        spearman,
        notes,
    }
}
