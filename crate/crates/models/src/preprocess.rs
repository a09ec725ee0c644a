//! Leakage-free preprocessing: median imputation and standardization for
//! numerical columns, integer codes for categorical columns. Statistics are
//! fitted on training rows only and then applied unchanged to any split.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataset::{Cell, Dataset, FeatureKind, RawDataset};
use crate::error::{ModelError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ColumnTransform {
    Numerical {
        median: f64,
        mean: f64,
        /// Population std; a constant column stores 1 so it maps to 0.
        std: f64,
    },
    Categorical {
        codes: BTreeMap<String, usize>,
        /// Code for categories not seen during fitting, and for missing cells.
        reserved: usize,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Preprocessor {
    columns: Option<Vec<ColumnTransform>>,
}

fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

impl Preprocessor {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_fitted(&self) -> bool {
        self.columns.is_some()
    }

    pub fn columns(&self) -> Option<&[ColumnTransform]> {
        self.columns.as_deref()
    }

    pub fn fit(&mut self, train: &RawDataset) -> Result<()> {
        let mut columns = Vec::with_capacity(train.n_features());
        for (j, meta) in train.meta.iter().enumerate() {
            let column = match meta.kind {
                FeatureKind::Numerical => {
                    let mut present: Vec<f64> = train
                        .rows
                        .iter()
                        .filter_map(|r| match r[j] {
                            Cell::Num(v) => Some(v),
                            _ => None,
                        })
                        .collect();
                    let med = median(&mut present);
                    let n = train.len().max(1) as f64;
                    let imputed = |c: &Cell| match c {
                        Cell::Num(v) => *v,
                        _ => med,
                    };
                    let mean = train.rows.iter().map(|r| imputed(&r[j])).sum::<f64>() / n;
                    let var = train
                        .rows
                        .iter()
                        .map(|r| (imputed(&r[j]) - mean).powi(2))
                        .sum::<f64>()
                        / n;
                    let std = var.sqrt();
                    ColumnTransform::Numerical {
                        median: med,
                        mean,
                        std: if std > 0.0 { std } else { 1.0 },
                    }
                }
                FeatureKind::Categorical => {
                    let mut codes = BTreeMap::new();
                    for r in &train.rows {
                        let key = match &r[j] {
                            Cell::Cat(s) => s.clone(),
                            Cell::Num(v) => v.to_string(),
                            Cell::Missing => continue,
                        };
                        codes.entry(key).or_insert(0);
                    }
                    for (i, code) in codes.values_mut().enumerate() {
                        *code = i;
                    }
                    let reserved = codes.len();
                    ColumnTransform::Categorical { codes, reserved }
                }
            };
            columns.push(column);
        }
        self.columns = Some(columns);
        Ok(())
    }

    pub fn transform(&self, data: &RawDataset) -> Result<Dataset> {
        let columns = self.columns.as_ref().ok_or(ModelError::NotFitted)?;
        if columns.len() != data.n_features() {
            return Err(ModelError::Dimension {
                expected: columns.len(),
                found: data.n_features(),
            });
        }
        let rows = data
            .rows
            .iter()
            .map(|row| {
                row.iter()
                    .zip(columns)
                    .map(|(cell, col)| match col {
                        ColumnTransform::Numerical { median, mean, std } => {
                            let v = match cell {
                                Cell::Num(v) => *v,
                                _ => *median,
                            };
                            (v - mean) / std
                        }
                        ColumnTransform::Categorical { codes, reserved } => {
                            let key = match cell {
                                Cell::Cat(s) => Some(s.clone()),
                                Cell::Num(v) => Some(v.to_string()),
                                Cell::Missing => None,
                            };
                            key.and_then(|k| codes.get(&k).copied())
                                .unwrap_or(*reserved) as f64
                        }
                    })
                    .collect()
            })
            .collect();
        Dataset::new(rows, data.labels.clone(), data.meta.clone())
    }

    pub fn fit_transform(&mut self, train: &RawDataset) -> Result<Dataset> {
        self.fit(train)?;
        self.transform(train)
    }
}

pub fn fit_preprocessor(train: &RawDataset) -> Result<Preprocessor> {
    let mut p = Preprocessor::new();
    p.fit(train)?;
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::FeatureMeta;
    use approx::assert_abs_diff_eq;

    fn raw(rows: Vec<Vec<Cell>>, meta: Vec<FeatureMeta>) -> RawDataset {
        let n = rows.len();
        RawDataset::new(rows, vec![0; n], meta).unwrap()
    }

    #[test]
    fn standardizes_with_population_std() {
        let d = raw(
            vec![
                vec![Cell::Num(1.0)],
                vec![Cell::Num(2.0)],
                vec![Cell::Num(3.0)],
            ],
            vec![FeatureMeta::numerical("a")],
        );
        let out = fit_preprocessor(&d).unwrap().transform(&d).unwrap();
        let col: Vec<f64> = out.rows.iter().map(|r| r[0]).collect();
        assert_abs_diff_eq!(col[0], -1.224_744_871_391_589, epsilon = 1e-12);
        assert_abs_diff_eq!(col[1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(col[2], 1.224_744_871_391_589, epsilon = 1e-12);
    }

    #[test]
    fn constant_feature_maps_to_zero() {
        let d = raw(
            vec![vec![Cell::Num(4.0)]; 3],
            vec![FeatureMeta::numerical("c")],
        );
        let out = fit_preprocessor(&d).unwrap().transform(&d).unwrap();
        assert!(out.rows.iter().all(|r| r[0] == 0.0));
    }

    #[test]
    fn missing_values_take_the_training_median() {
        let train = raw(
            vec![
                vec![Cell::Num(1.0)],
                vec![Cell::Num(5.0)],
                vec![Cell::Num(9.0)],
                vec![Cell::Missing],
            ],
            vec![FeatureMeta::numerical("a")],
        );
        let p = fit_preprocessor(&train).unwrap();
        let ColumnTransform::Numerical { median, .. } = p.columns().unwrap()[0] else {
            panic!("numerical column expected");
        };
        assert_eq!(median, 5.0);
        let test = raw(vec![vec![Cell::Missing]], vec![FeatureMeta::numerical("a")]);
        let t = p.transform(&test).unwrap();
        let direct = p
            .transform(&raw(
                vec![vec![Cell::Num(5.0)]],
                vec![FeatureMeta::numerical("a")],
            ))
            .unwrap();
        assert_eq!(t.rows[0][0], direct.rows[0][0]);
    }

    #[test]
    fn unseen_category_gets_reserved_code() {
        let meta = vec![FeatureMeta::categorical("color")];
        let train = raw(
            vec![
                vec![Cell::Cat("red".into())],
                vec![Cell::Cat("blue".into())],
            ],
            meta.clone(),
        );
        let p = fit_preprocessor(&train).unwrap();
        let test = raw(
            vec![
                vec![Cell::Cat("green".into())],
                vec![Cell::Cat("red".into())],
                vec![Cell::Missing],
            ],
            meta,
        );
        let t = p.transform(&test).unwrap();
        // blue = 0, red = 1, reserved = 2
        assert_eq!(t.rows, vec![vec![2.0], vec![1.0], vec![2.0]]);
    }

    #[test]
    fn transform_before_fit_is_a_state_error() {
        let d = raw(
            vec![vec![Cell::Num(1.0)]],
            vec![FeatureMeta::numerical("a")],
        );
        assert_eq!(
            Preprocessor::new().transform(&d).unwrap_err(),
            ModelError::NotFitted
        );
    }

    #[test]
    fn statistics_ignore_test_rows() {
        let meta = vec![FeatureMeta::numerical("a"), FeatureMeta::categorical("b")];
        let train = raw(
            vec![
                vec![Cell::Num(0.5), Cell::Cat("x".into())],
                vec![Cell::Num(2.5), Cell::Cat("y".into())],
            ],
            meta.clone(),
        );
        let a = fit_preprocessor(&train).unwrap();
        // fitting again after a test split exists must not change anything
        let test = raw(vec![vec![Cell::Num(100.0), Cell::Cat("z".into())]], meta);
        let _ = a.transform(&test).unwrap();
        let b = fit_preprocessor(&train).unwrap();
        assert_eq!(a, b);
    }
}
