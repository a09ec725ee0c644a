//! Dataset ingestion from delimited text and the built-in synthetic generator.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use cies_core::rng;
use cies_models::{Cell, FeatureKind, FeatureMeta, RawDataset};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::config::{CsvSource, SyntheticSpec};
use crate::error::{HarnessError, Result};

fn data_err(msg: impl Into<String>) -> HarnessError {
    HarnessError::Data(msg.into())
}

fn is_missing(cell: &str) -> bool {
    matches!(cell, "" | "?" | "NA" | "N/A" | "nan" | "NaN" | "null")
}

/// Maps the two distinct target values to 0/1.
fn positive_label(values: &BTreeSet<&str>, explicit: Option<&str>) -> Result<String> {
    if values.len() != 2 {
        return Err(data_err(format!(
            "target must have exactly two distinct values, found {}: {:?}",
            values.len(),
            values.iter().take(5).collect::<Vec<_>>()
        )));
    }
    if let Some(p) = explicit {
        return if values.contains(p) {
            Ok(p.to_string())
        } else {
            Err(data_err(format!(
                "positive label `{p}` does not occur in the target column"
            )))
        };
    }
    let parsed: Option<Vec<f64>> = values.iter().map(|v| v.parse::<f64>().ok()).collect();
    Ok(match parsed {
        Some(nums) => {
            let hi = if nums[1] > nums[0] { 1 } else { 0 };
            values.iter().nth(hi).unwrap().to_string()
        }
        None => values.iter().next_back().unwrap().to_string(),
    })
}

/// Reads a delimited file with a header row. Columns are numerical when every
/// present cell parses as a number, unless overridden.
pub fn load_dataset(src: &CsvSource) -> Result<RawDataset> {
    let bytes = std::fs::read(&src.path).map_err(|e| HarnessError::io(&src.path, e))?;
    parse_dataset(&bytes, src)
}

pub fn parse_dataset(bytes: &[u8], src: &CsvSource) -> Result<RawDataset> {
    if !src.delimiter.is_ascii() {
        return Err(HarnessError::Config(
            "delimiter must be an ASCII character".into(),
        ));
    }
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(src.delimiter as u8)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| data_err(format!("cannot read header: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();
    let target_idx = header
        .iter()
        .position(|h| h == &src.target)
        .ok_or_else(|| data_err(format!("target column `{}` not found", src.target)))?;
    for name in src.overrides.keys() {
        if !header.contains(name) || name == &src.target {
            return Err(data_err(format!(
                "override refers to unknown feature column `{name}`"
            )));
        }
    }

    let mut records: Vec<Vec<String>> = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        // line numbers count the header as line 1
        let line = i + 2;
        let rec = rec.map_err(|e| data_err(format!("line {line}: {e}")))?;
        if rec.len() != header.len() {
            return Err(data_err(format!(
                "line {line}: expected {} fields, found {}",
                header.len(),
                rec.len()
            )));
        }
        if is_missing(&rec[target_idx]) {
            return Err(data_err(format!("line {line}: missing target value")));
        }
        records.push(rec.iter().map(str::to_string).collect());
    }
    if records.is_empty() {
        return Err(data_err("file has no data rows"));
    }

    let targets: BTreeSet<&str> = records.iter().map(|r| r[target_idx].as_str()).collect();
    let positive = positive_label(&targets, src.positive_label.as_deref())?;

    let feature_cols: Vec<usize> = (0..header.len()).filter(|&c| c != target_idx).collect();
    let meta: Vec<FeatureMeta> = feature_cols
        .iter()
        .map(|&c| {
            let kind = src.overrides.get(&header[c]).copied().unwrap_or_else(|| {
                let numeric = records
                    .iter()
                    .map(|r| r[c].as_str())
                    .filter(|v| !is_missing(v))
                    .all(|v| v.parse::<f64>().is_ok_and(f64::is_finite));
                if numeric {
                    FeatureKind::Numerical
                } else {
                    FeatureKind::Categorical
                }
            });
            FeatureMeta {
                name: header[c].clone(),
                kind,
            }
        })
        .collect();

    let mut rows = Vec::with_capacity(records.len());
    for (i, r) in records.iter().enumerate() {
        let line = i + 2;
        let row = feature_cols
            .iter()
            .zip(&meta)
            .map(|(&c, m)| {
                let v = r[c].as_str();
                if is_missing(v) {
                    return Ok(Cell::Missing);
                }
                match m.kind {
                    FeatureKind::Numerical => v
                        .parse::<f64>()
                        .ok()
                        .filter(|x| x.is_finite())
                        .map(Cell::Num)
                        .ok_or_else(|| {
                            data_err(format!(
                                "line {line}: column `{}` value `{v}` is not numeric",
                                m.name
                            ))
                        }),
                    FeatureKind::Categorical => Ok(Cell::Cat(v.to_string())),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    let labels = records
        .iter()
        .map(|r| u8::from(r[target_idx] == positive))
        .collect();
    Ok(RawDataset::new(rows, labels, meta)?)
}

const LEVELS: [&str; 3] = ["a", "b", "c"];

/// Two-class Gaussian mixture on raw (unstandardized) scales, with
/// categorical features whose level distribution depends on the class.
pub fn synthesize(spec: &SyntheticSpec) -> Result<RawDataset> {
    let n = spec.n_rows;
    let n_pos = (spec.positive_fraction * n as f64).round() as usize;
    if n_pos < 2 || n - n_pos < 2 {
        return Err(data_err("synthetic data needs at least two rows per class"));
    }
    let mut labels: Vec<u8> = (0..n).map(|i| u8::from(i < n_pos)).collect();
    labels.shuffle(&mut rng::substream(&[spec.seed, rng::tag::SYNTH]));

    let mut meta: Vec<FeatureMeta> = (0..spec.n_numerical)
        .map(|j| FeatureMeta::numerical(format!("num{j}")))
        .collect();
    meta.extend((0..spec.n_categorical).map(|j| FeatureMeta::categorical(format!("cat{j}"))));

    let rows = labels
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            let mut rng = rng::substream(&[spec.seed, rng::tag::SYNTH, 1, i as u64]);
            let mut row = Vec::with_capacity(meta.len());
            for j in 0..spec.n_numerical {
                let z: f64 = StandardNormal.sample(&mut rng);
                let shift = if j < spec.n_informative {
                    spec.separation * 0.7f64.powi(j as i32) * f64::from(y)
                } else {
                    0.0
                };
                // distinct raw location and scale per column
                let (loc, scale) = (10.0 * j as f64 - 15.0, 1.0 + 0.5 * j as f64);
                row.push(Cell::Num(loc + scale * (z + shift)));
            }
            for _ in 0..spec.n_categorical {
                let u: f64 = rng.random();
                let level = if y == 1 {
                    (u * u * 3.0) as usize
                } else {
                    (u.sqrt() * 3.0) as usize
                };
                row.push(Cell::Cat(LEVELS[level.min(2)].to_string()));
            }
            for cell in row.iter_mut() {
                if rng.random::<f64>() < spec.missing_fraction {
                    *cell = Cell::Missing;
                }
            }
            row
        })
        .collect();
    Ok(RawDataset::new(rows, labels, meta)?)
}

/// Writes a raw dataset as CSV with the label in a final `target` column.
pub fn write_csv(data: &RawDataset, path: &Path) -> Result<()> {
    let mut w =
        csv::Writer::from_path(path).map_err(|e| data_err(format!("{}: {e}", path.display())))?;
    let mut header: Vec<&str> = data.meta.iter().map(|m| m.name.as_str()).collect();
    header.push("target");
    let io = |e: csv::Error| data_err(format!("{}: {e}", path.display()));
    w.write_record(&header).map_err(io)?;
    for (row, y) in data.rows.iter().zip(&data.labels) {
        let mut rec: Vec<String> = row
            .iter()
            .map(|c| match c {
                Cell::Num(v) => v.to_string(),
                Cell::Cat(s) => s.clone(),
                Cell::Missing => String::new(),
            })
            .collect();
        rec.push(y.to_string());
        w.write_record(&rec).map_err(io)?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

/// Column kinds keyed by name, for reports.
pub fn feature_kinds(data: &RawDataset) -> BTreeMap<String, FeatureKind> {
    data.meta.iter().map(|m| (m.name.clone(), m.kind)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn src() -> CsvSource {
        CsvSource {
            target: "y".into(),
            ..Default::default()
        }
    }

    #[test]
    fn three_rows_with_header() {
        let d = parse_dataset(b"a,b,y\n1,x,0\n2,y,1\n3,x,1\n", &src()).unwrap();
        assert_eq!((d.len(), d.n_features()), (3, 2));
        assert_eq!(d.meta[0].kind, FeatureKind::Numerical);
        assert_eq!(d.meta[1].kind, FeatureKind::Categorical);
        assert_eq!(d.labels, vec![0, 1, 1]);
    }

    #[test]
    fn empty_cell_is_missing() {
        let d = parse_dataset(b"a,y\n1,0\n,1\n", &src()).unwrap();
        assert_eq!(d.rows[1][0], Cell::Missing);
        assert_eq!(d.meta[0].kind, FeatureKind::Numerical);
    }

    #[test]
    fn non_binary_target_is_rejected() {
        let err = parse_dataset(b"a,y\n1,0\n2,1\n3,2\n", &src()).unwrap_err();
        assert!(err.to_string().contains("exactly two"), "{err}");
    }

    #[test]
    fn positive_label_rules() {
        let d = parse_dataset(b"a,y\n1,no\n2,yes\n", &src()).unwrap();
        assert_eq!(d.labels, vec![0, 1]);
        let d = parse_dataset(b"a,y\n1,10\n2,-1\n", &src()).unwrap();
        assert_eq!(d.labels, vec![1, 0]);
        let explicit = CsvSource {
            positive_label: Some("no".into()),
            ..src()
        };
        assert_eq!(
            parse_dataset(b"a,y\n1,no\n2,yes\n", &explicit)
                .unwrap()
                .labels,
            vec![1, 0]
        );
    }

    #[test]
    fn errors_carry_line_numbers() {
        let forced = CsvSource {
            overrides: [("a".to_string(), FeatureKind::Numerical)].into(),
            ..src()
        };
        let err = parse_dataset(b"a,y\n1,0\nzz,1\n", &forced).unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        let err = parse_dataset(b"a,y\n1,0\n2,1,5\n", &src()).unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        assert!(parse_dataset(b"a,b\n1,0\n", &src()).is_err());
    }

    #[test]
    fn synthetic_data_has_requested_shape() {
        let spec = SyntheticSpec::default();
        let d = synthesize(&spec).unwrap();
        assert_eq!(d.len(), 1000);
        assert_eq!(d.n_features(), 8);
        assert_eq!(d.labels.iter().filter(|&&y| y == 1).count(), 300);
        assert_eq!(synthesize(&spec).unwrap(), d);
    }

    #[test]
    fn csv_roundtrip() {
        let spec = SyntheticSpec {
            n_rows: 40,
            missing_fraction: 0.1,
            ..Default::default()
        };
        let d = synthesize(&spec).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        write_csv(&d, &path).unwrap();
        let back = load_dataset(&CsvSource {
            path,
            target: "target".into(),
            ..Default::default()
        })
        .unwrap();
        assert_eq!(back.labels, d.labels);
        assert_eq!(back.rows, d.rows);
    }
}
