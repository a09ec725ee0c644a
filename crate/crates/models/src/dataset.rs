use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Numerical,
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureMeta {
    pub name: String,
    pub kind: FeatureKind,
}

impl FeatureMeta {
    pub fn numerical(name: impl Into<String>) -> Self {
        FeatureMeta {
            name: name.into(),
            kind: FeatureKind::Numerical,
        }
    }

    pub fn categorical(name: impl Into<String>) -> Self {
        FeatureMeta {
            name: name.into(),
            kind: FeatureKind::Categorical,
        }
    }
}

/// A raw cell before imputation and encoding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Cell {
    Num(f64),
    Cat(String),
    Missing,
}

fn validate_shape(
    n_rows: usize,
    n_labels: usize,
    widths: impl Iterator<Item = usize>,
    m: usize,
) -> Result<()> {
    if n_rows != n_labels {
        return Err(ModelError::Data(format!(
            "{n_rows} rows but {n_labels} labels"
        )));
    }
    for (i, w) in widths.enumerate() {
        if w != m {
            return Err(ModelError::Data(format!(
                "row {i} has {w} cells, expected {m}"
            )));
        }
    }
    Ok(())
}

fn validate_labels(labels: &[u8]) -> Result<()> {
    match labels.iter().position(|&y| y > 1) {
        Some(i) => Err(ModelError::Data(format!("label at row {i} is not 0/1"))),
        None => Ok(()),
    }
}

/// Tabular data as read from disk: mixed cells, binary labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawDataset {
    pub rows: Vec<Vec<Cell>>,
    pub labels: Vec<u8>,
    pub meta: Vec<FeatureMeta>,
}

impl RawDataset {
    pub fn new(rows: Vec<Vec<Cell>>, labels: Vec<u8>, meta: Vec<FeatureMeta>) -> Result<Self> {
        validate_shape(
            rows.len(),
            labels.len(),
            rows.iter().map(Vec::len),
            meta.len(),
        )?;
        validate_labels(&labels)?;
        for (i, row) in rows.iter().enumerate() {
            for (cell, fm) in row.iter().zip(&meta) {
                match (cell, fm.kind) {
                    (Cell::Cat(_), FeatureKind::Numerical) => {
                        return Err(ModelError::Data(format!(
                            "row {i}: non-numeric value in numerical column `{}`",
                            fm.name
                        )))
                    }
                    (Cell::Num(v), _) if !v.is_finite() => {
                        return Err(ModelError::Data(format!(
                            "row {i}: non-finite value in column `{}`",
                            fm.name
                        )))
                    }
                    _ => {}
                }
            }
        }
        Ok(RawDataset { rows, labels, meta })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.meta.len()
    }

    pub fn subset(&self, idx: &[usize]) -> RawDataset {
        RawDataset {
            rows: idx.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            meta: self.meta.clone(),
        }
    }
}

/// Model-ready data: every cell is a finite number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
    pub meta: Vec<FeatureMeta>,
}

impl Dataset {
    pub fn new(rows: Vec<Vec<f64>>, labels: Vec<u8>, meta: Vec<FeatureMeta>) -> Result<Self> {
        validate_shape(
            rows.len(),
            labels.len(),
            rows.iter().map(Vec::len),
            meta.len(),
        )?;
        validate_labels(&labels)?;
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(ModelError::Data("non-finite feature value".into()));
        }
        Ok(Dataset { rows, labels, meta })
    }

    /// All-numerical dataset with generated feature names.
    pub fn numeric(rows: Vec<Vec<f64>>, labels: Vec<u8>) -> Result<Self> {
        let m = rows.first().map_or(0, Vec::len);
        let meta = (0..m)
            .map(|j| FeatureMeta::numerical(format!("x{j}")))
            .collect();
        Self::new(rows, labels, meta)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.meta.len()
    }

    pub fn numeric_mask(&self) -> Vec<bool> {
        self.meta
            .iter()
            .map(|m| m.kind == FeatureKind::Numerical)
            .collect()
    }

    pub fn class_counts(&self) -> [usize; 2] {
        let pos = self.labels.iter().filter(|&&y| y == 1).count();
        [self.labels.len() - pos, pos]
    }

    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            rows: idx.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            meta: self.meta.clone(),
        }
    }

    /// Population mean and standard deviation of each column.
    pub fn column_moments(&self) -> Vec<(f64, f64)> {
        let n = self.rows.len().max(1) as f64;
        (0..self.n_features())
            .map(|j| {
                let mean = self.rows.iter().map(|r| r[j]).sum::<f64>() / n;
                let var = self.rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
                (mean, var.sqrt())
            })
            .collect()
    }
}
