//! Labeled univariate series, UCR-format ingestion and windowing.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default threshold below which a window counts as constant.
pub const DEFAULT_EPSILON: f64 = 1e-8;

/// A single labeled series. `label` is the internal class index `0..K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub id: usize,
    pub values: Vec<f64>,
    pub label: usize,
}

impl TimeSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// A collection of labeled series.
///
/// `classes[i]` is the original label text of internal class `i`, in order
/// of first appearance in the source file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub name: String,
    pub series: Vec<TimeSeries>,
    pub classes: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Delimiter {
    #[default]
    Auto,
    Tab,
    Comma,
    Whitespace,
}

impl Dataset {
    /// Builds a dataset from `(original label, values)` pairs, recoding the
    /// labels to `0..K` in order of first appearance.
    pub fn from_labeled<L: ToString>(
        name: impl Into<String>,
        rows: impl IntoIterator<Item = (L, Vec<f64>)>,
    ) -> Result<Self> {
        let mut classes: Vec<String> = Vec::new();
        let mut series = Vec::new();
        for (id, (label, values)) in rows.into_iter().enumerate() {
            if values.is_empty() {
                return Err(Error::Empty("series values"));
            }
            let label = label.to_string();
            let idx = match classes.iter().position(|c| *c == label) {
                Some(i) => i,
                None => {
                    classes.push(label);
                    classes.len() - 1
                }
            };
            let values = values
                .into_iter()
                .map(|v| if v.is_nan() { 0.0 } else { v })
                .collect();
            series.push(TimeSeries {
                id,
                values,
                label: idx,
            });
        }
        if series.is_empty() {
            return Err(Error::Empty("dataset"));
        }
        Ok(Dataset {
            name: name.into(),
            series,
            classes,
        })
    }

    pub fn len(&self) -> usize {
        self.series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.series.iter().map(|s| s.label).collect()
    }

    pub fn min_len(&self) -> usize {
        self.series.iter().map(TimeSeries::len).min().unwrap_or(0)
    }

    pub fn max_len(&self) -> usize {
        self.series.iter().map(TimeSeries::len).max().unwrap_or(0)
    }

    /// Series indices grouped by class index.
    pub fn indices_by_class(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.classes.len()];
        for (i, s) in self.series.iter().enumerate() {
            out[s.label].push(i);
        }
        out
    }

    /// A new dataset holding the given series (re-numbered from 0) with the
    /// same class coding.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let series = indices
            .iter()
            .enumerate()
            .map(|(id, &i)| TimeSeries {
                id,
                values: self.series[i].values.clone(),
                label: self.series[i].label,
            })
            .collect();
        Dataset {
            name: self.name.clone(),
            series,
            classes: self.classes.clone(),
        }
    }

    /// Recodes this dataset's labels against `reference` so that class `i`
    /// means the same original label in both. Labels unknown to `reference`
    /// are an error.
    pub fn align_classes(&mut self, reference: &[String]) -> Result<()> {
        let mut map = Vec::with_capacity(self.classes.len());
        for c in &self.classes {
            match reference.iter().position(|r| r == c) {
                Some(i) => map.push(i),
                None => {
                    return Err(Error::InvalidParameter(format!(
                        "label {c} in {} is not a known class",
                        self.name
                    )))
                }
            }
        }
        for s in &mut self.series {
            s.label = map[s.label];
        }
        self.classes = reference.to_vec();
        Ok(())
    }
}

fn detect_delimiter(line: &str) -> Delimiter {
    if line.contains('\t') {
        Delimiter::Tab
    } else if line.contains(',') {
        Delimiter::Comma
    } else {
        Delimiter::Whitespace
    }
}

fn split_fields(line: &str, delimiter: Delimiter) -> Vec<&str> {
    match delimiter {
        Delimiter::Tab => line.split('\t').collect(),
        Delimiter::Comma => line.split(',').collect(),
        Delimiter::Whitespace | Delimiter::Auto => line.split_whitespace().collect(),
    }
}

fn parse_value(field: &str) -> Option<f64> {
    let f = field.trim();
    if f.is_empty() {
        return Some(f64::NAN);
    }
    f.parse::<f64>().ok()
}

/// Canonical text for a numeric label, so `1`, `1.0` and `+1` are one class.
fn canonical_label(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else {
        format!("{v}")
    }
}

/// Loads a UCR-archive text file: one series per line, label first.
///
/// NaN and empty fields become 0; shorter rows are zero-padded to the
/// longest row in the file.
pub fn load_ucr(path: impl AsRef<Path>, delimiter: Delimiter) -> Result<Dataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .map(|s| s.trim_end_matches("_TRAIN").trim_end_matches("_TEST"))
        .unwrap_or("dataset")
        .to_string();
    parse_ucr(&text, delimiter, &name, path)
}

pub(crate) fn parse_ucr(
    text: &str,
    delimiter: Delimiter,
    name: &str,
    path: &Path,
) -> Result<Dataset> {
    let mut delimiter = delimiter;
    let mut rows: Vec<(String, Vec<f64>)> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let row = lineno + 1;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        if delimiter == Delimiter::Auto {
            delimiter = detect_delimiter(line);
        }
        let fields = split_fields(line.trim(), delimiter);
        let label = fields
            .first()
            .and_then(|f| f.trim().parse::<f64>().ok())
            .filter(|v| v.is_finite())
            .ok_or_else(|| Error::Ingest {
                path: path.to_path_buf(),
                row,
                message: "missing or non-numeric label".into(),
            })?;
        let mut values = Vec::with_capacity(fields.len().saturating_sub(1));
        for (col, f) in fields.iter().enumerate().skip(1) {
            let v = parse_value(f).ok_or_else(|| Error::Ingest {
                path: path.to_path_buf(),
                row,
                message: format!("field {} is not a number: {:?}", col + 1, f.trim()),
            })?;
            values.push(if v.is_nan() { 0.0 } else { v });
        }
        if values.is_empty() {
            return Err(Error::Ingest {
                path: path.to_path_buf(),
                row,
                message: "row has a label but no values".into(),
            });
        }
        rows.push((canonical_label(label), values));
    }
    if rows.is_empty() {
        return Err(Error::EmptyFile {
            path: path.to_path_buf(),
        });
    }
    let width = rows.iter().map(|(_, v)| v.len()).max().unwrap_or(0);
    for (_, v) in &mut rows {
        v.resize(width, 0.0);
    }
    Dataset::from_labeled(name, rows)
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Shifts and scales `window` to zero mean and unit (population) standard
/// deviation. A window whose deviation is below `epsilon` maps to zeros.
pub fn znormalize(window: &[f64], epsilon: f64) -> Result<Vec<f64>> {
    let mut out = window.to_vec();
    znormalize_in_place(&mut out, epsilon)?;
    Ok(out)
}

pub fn znormalize_in_place(window: &mut [f64], epsilon: f64) -> Result<()> {
    if window.is_empty() {
        return Err(Error::Empty("window"));
    }
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let (mean, std) = mean_std(window);
    if std < epsilon {
        window.iter_mut().for_each(|v| *v = 0.0);
    } else {
        window.iter_mut().for_each(|v| *v = (*v - mean) / std);
    }
    Ok(())
}

/// Number of windows of `window_len` at `stride` that fit in `len` samples.
pub fn window_count(len: usize, window_len: usize, stride: usize) -> usize {
    if window_len == 0 || stride == 0 || window_len > len {
        0
    } else {
        (len - window_len) / stride + 1
    }
}

/// All windows of `window_len` samples starting at multiples of `stride`,
/// as `(start, slice)` pairs.
pub fn sliding_windows(
    values: &[f64],
    window_len: usize,
    stride: usize,
) -> Result<Vec<(usize, &[f64])>> {
    if window_len == 0 || stride == 0 {
        return Err(Error::InvalidParameter(
            "window length and stride must be positive".into(),
        ));
    }
    if window_len > values.len() {
        return Err(Error::WindowTooLong {
            window_len,
            series_len: values.len(),
        });
    }
    Ok((0..window_count(values.len(), window_len, stride))
        .map(|i| {
            let start = i * stride;
            (start, &values[start..start + window_len])
        })
        .collect())
}
