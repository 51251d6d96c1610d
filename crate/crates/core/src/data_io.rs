//! LIBSVM sparse text format: `label idx:val idx:val ...` with 1-based,
//! strictly increasing feature indices. Indices become 0-based here and
//! nowhere else.

use std::fmt::Write as _;
use std::io::BufRead;
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};

/// Immutable row-compressed sample storage.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseDataset {
    row_ptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
    labels: Vec<f64>,
    n_features: usize,
}

impl SparseDataset {
    /// Builds a dataset from rows of `(0-based index, value)` pairs.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>, labels: Vec<f64>, n_features: usize) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::NoSamples);
        }
        if rows.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: rows.len(),
                found: labels.len(),
            });
        }
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for (r, row) in rows.into_iter().enumerate() {
            let mut prev: Option<usize> = None;
            for (j, v) in row {
                if prev.is_some_and(|p| j <= p) || j >= n_features {
                    return Err(Error::Parse {
                        line: r + 1,
                        message: format!("feature index {} out of order or out of range", j + 1),
                    });
                }
                prev = Some(j);
                indices.push(j);
                values.push(v);
            }
            row_ptr.push(indices.len());
        }
        Ok(Self {
            row_ptr,
            indices,
            values,
            labels,
            n_features,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// The nonzeros of row `i` as parallel index/value slices.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.indices[a..b], &self.values[a..b])
    }

    /// Sparse dot product `a_i . x`.
    pub fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        let (idx, val) = self.row(i);
        idx.iter().zip(val).map(|(&j, &v)| v * x[j]).sum()
    }

    /// `out += scale * a_i`.
    pub fn row_axpy(&self, i: usize, scale: f64, out: &mut [f64]) {
        let (idx, val) = self.row(i);
        for (&j, &v) in idx.iter().zip(val) {
            out[j] += scale * v;
        }
    }

    /// Replaces the labels, keeping the features.
    pub fn with_labels(mut self, labels: Vec<f64>) -> Result<Self> {
        if labels.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: labels.len(),
            });
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn stats(&self) -> DatasetStats {
        let mut distinct: Vec<f64> = Vec::new();
        for &l in &self.labels {
            if !distinct.contains(&l) {
                distinct.push(l);
            }
        }
        distinct.sort_by(f64::total_cmp);
        DatasetStats {
            samples: self.len(),
            features: self.n_features,
            nonzeros: self.nnz(),
            distinct_labels: distinct,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetStats {
    pub samples: usize,
    pub features: usize,
    pub nonzeros: usize,
    pub distinct_labels: Vec<f64>,
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Parses LIBSVM text. Blank lines and `#` comments are skipped; raw labels
/// are kept as read.
pub fn parse_libsvm<R: BufRead>(reader: R) -> Result<SparseDataset> {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut n_features = 0usize;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut tokens = content.split_whitespace();
        let label_tok = tokens.next().expect("nonempty line has a token");
        let label: f64 = label_tok
            .parse()
            .map_err(|_| parse_err(lineno, format!("bad label `{label_tok}`")))?;
        if !label.is_finite() {
            return Err(parse_err(lineno, format!("bad label `{label_tok}`")));
        }
        let mut row = Vec::new();
        let mut prev = 0usize;
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| parse_err(lineno, format!("expected idx:val, got `{tok}`")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| parse_err(lineno, format!("bad feature index in `{tok}`")))?;
            if idx == 0 {
                return Err(parse_err(lineno, "feature indices are 1-based"));
            }
            if idx <= prev {
                return Err(parse_err(lineno, format!("feature index {idx} not increasing")));
            }
            let val: f64 = val
                .parse()
                .map_err(|_| parse_err(lineno, format!("bad feature value in `{tok}`")))?;
            if !val.is_finite() {
                return Err(parse_err(lineno, format!("non-finite feature value in `{tok}`")));
            }
            prev = idx;
            row.push((idx - 1, val));
        }
        n_features = n_features.max(prev);
        rows.push(row);
        labels.push(label);
    }
    if rows.is_empty() {
        return Err(Error::NoSamples);
    }
    SparseDataset::from_rows(rows, labels, n_features)
}

pub fn read_libsvm(path: impl AsRef<Path>) -> Result<SparseDataset> {
    let file = std::fs::File::open(path)?;
    parse_libsvm(std::io::BufReader::new(file))
}

/// Writes the dataset back out in LIBSVM form (1-based indices). Values use
/// the shortest representation that parses back to the same `f64`.
pub fn to_libsvm_string(data: &SparseDataset) -> String {
    let mut out = String::new();
    for i in 0..data.len() {
        let _ = write!(out, "{}", data.labels[i]);
        let (idx, val) = data.row(i);
        for (&j, &v) in idx.iter().zip(val) {
            let _ = write!(out, " {}:{}", j + 1, v);
        }
        out.push('\n');
    }
    out
}

/// How raw labels were mapped onto `{-1, +1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabelMap {
    pub negative: f64,
    pub positive: f64,
}

/// Maps the smaller of exactly two raw label values to -1 and the larger to +1.
pub fn encode_labels(raw: &[f64]) -> Result<(Vec<f64>, LabelMap)> {
    let mut distinct: Vec<f64> = Vec::with_capacity(2);
    for &l in raw {
        if !distinct.contains(&l) {
            if distinct.len() == 2 {
                return Err(Error::Labels("more than two distinct labels".into()));
            }
            distinct.push(l);
        }
    }
    if distinct.len() < 2 {
        return Err(Error::Labels(format!(
            "need exactly two distinct labels, found {}",
            distinct.len()
        )));
    }
    distinct.sort_by(f64::total_cmp);
    let map = LabelMap {
        negative: distinct[0],
        positive: distinct[1],
    };
    let encoded = raw
        .iter()
        .map(|&l| if l == map.negative { -1.0 } else { 1.0 })
        .collect();
    Ok((encoded, map))
}

/// Dense Gaussian features with standard deviation `feature_scale`, labels
/// from the sign of a planted separator, a `noise` fraction of labels flipped.
pub fn synthetic_classification(
    samples: usize,
    features: usize,
    noise: f64,
    feature_scale: f64,
    seed: u64,
) -> Result<SparseDataset> {
    if samples == 0 || features == 0 || !(0.0..=1.0).contains(&noise) || !(feature_scale > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "synthetic data needs samples, features, feature_scale > 0 and noise in [0, 1] \
             (got {samples}, {features}, {feature_scale}, {noise})"
        )));
    }
    let mut rng = stream_rng(seed, Stream::Init);
    let scale = feature_scale;
    let separator: Vec<f64> = (0..features).map(|_| rng.sample(StandardNormal)).collect();
    let mut rows = Vec::with_capacity(samples);
    let mut labels = Vec::with_capacity(samples);
    for _ in 0..samples {
        let row: Vec<(usize, f64)> = (0..features)
            .map(|j| (j, scale * rng.sample::<f64, _>(StandardNormal)))
            .collect();
        let margin: f64 = row.iter().map(|&(j, v)| v * separator[j]).sum();
        let mut label = if margin >= 0.0 { 1.0 } else { -1.0 };
        if rng.random::<f64>() < noise {
            label = -label;
        }
        rows.push(row);
        labels.push(label);
    }
    SparseDataset::from_rows(rows, labels, features)
}
