//! Dense datasets: CSV ingestion, standardization, synthetic generation and
//! per-feature bounds.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::rng::seeded;
use crate::{Error, Result, Scalar};

/// `n` samples of `p` features plus one real label per sample.
///
/// Features are stored column-major: coordinate descent touches one feature
/// column per step.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    n: usize,
    p: usize,
    features: Vec<T>,
    labels: Vec<T>,
    feature_names: Option<Vec<String>>,
}

impl<T: Scalar> Dataset<T> {
    /// Builds a dataset from a column-major feature buffer.
    pub fn from_columns(n: usize, p: usize, features: Vec<T>, labels: Vec<T>) -> Result<Self> {
        if n == 0 || p == 0 {
            return Err(Error::InvalidDataset(format!(
                "need n >= 1 and p >= 1, got n = {n}, p = {p}"
            )));
        }
        if features.len() != n * p {
            return Err(Error::InvalidDataset(format!(
                "feature buffer has {} entries, expected {}",
                features.len(),
                n * p
            )));
        }
        if labels.len() != n {
            return Err(Error::InvalidDataset(format!(
                "{} labels for {n} samples",
                labels.len()
            )));
        }
        if let Some(k) = features.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidDataset(format!(
                "non-finite feature at row {}, column {}",
                k % n,
                k / n
            )));
        }
        if let Some(i) = labels.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidDataset(format!(
                "non-finite label at row {i}"
            )));
        }
        Ok(Self {
            n,
            p,
            features,
            labels,
            feature_names: None,
        })
    }

    /// Builds a dataset from rows of features.
    pub fn from_rows(rows: &[Vec<T>], labels: Vec<T>) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        if let Some(i) = rows.iter().position(|r| r.len() != p) {
            return Err(Error::InvalidDataset(format!(
                "row {i} has {} features, expected {p}",
                rows[i].len()
            )));
        }
        let mut features = vec![T::zero(); n * p];
        for (i, row) in rows.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                features[j * n + i] = x;
            }
        }
        Self::from_columns(n, p, features, labels)
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.p {
            return Err(Error::DimensionMismatch {
                expected: self.p,
                got: names.len(),
            });
        }
        self.feature_names = Some(names);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn labels(&self) -> &[T] {
        &self.labels
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    #[inline]
    pub fn column(&self, j: usize) -> &[T] {
        &self.features[j * self.n..(j + 1) * self.n]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.features[j * self.n + i]
    }

    pub fn row(&self, i: usize) -> Vec<T> {
        (0..self.p).map(|j| self.get(i, j)).collect()
    }

    /// Row-major copy of the feature matrix.
    pub fn to_row_major(&self) -> Vec<T> {
        let mut out = vec![T::zero(); self.n * self.p];
        for j in 0..self.p {
            for (i, &x) in self.column(j).iter().enumerate() {
                out[i * self.p + j] = x;
            }
        }
        out
    }

    /// Returns a copy with record `i` replaced.
    pub fn replace_row(&self, i: usize, features: &[T], label: T) -> Result<Self> {
        if features.len() != self.p {
            return Err(Error::DimensionMismatch {
                expected: self.p,
                got: features.len(),
            });
        }
        let mut out = self.clone();
        for (j, &x) in features.iter().enumerate() {
            out.features[j * self.n + i] = x;
        }
        out.labels[i] = label;
        Ok(out)
    }

    /// Multiplies column `j` by `factor`.
    pub fn scale_column(&mut self, j: usize, factor: T) {
        for x in &mut self.features[j * self.n..(j + 1) * self.n] {
            *x *= factor;
        }
    }

    /// Writes the dataset as CSV with a header row, label column last.
    pub fn write_csv<W: Write>(&self, writer: W, label_name: &str) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = match &self.feature_names {
            Some(names) => names.clone(),
            None => (1..=self.p).map(|j| format!("x{j}")).collect(),
        };
        header.push(label_name.to_string());
        w.write_record(&header)?;
        let mut record = Vec::with_capacity(self.p + 1);
        for i in 0..self.n {
            record.clear();
            record.extend((0..self.p).map(|j| self.get(i, j).to_string()));
            record.push(self.labels[i].to_string());
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>, label_name: &str) -> Result<()> {
        self.write_csv(File::create(path)?, label_name)
    }
}

/// Which CSV column holds the labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LabelColumn {
    Index(usize),
    Name(String),
}

impl std::str::FromStr for LabelColumn {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(k) => LabelColumn::Index(k),
            Err(_) => LabelColumn::Name(s.to_string()),
        })
    }
}

impl std::fmt::Display for LabelColumn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LabelColumn::Index(k) => write!(f, "{k}"),
            LabelColumn::Name(s) => f.write_str(s),
        }
    }
}

/// Reads a comma separated file with a header row. Rows and columns in error
/// messages are 1-based, the header being row 1.
pub fn read_csv<T: Scalar, R: Read>(reader: R, label: &LabelColumn) -> Result<Dataset<T>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let header: Vec<String> = rdr
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let width = header.len();
    let label_idx = match label {
        LabelColumn::Index(k) if *k < width => *k,
        LabelColumn::Name(name) => header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingLabelColumn(name.clone()))?,
        other => return Err(Error::MissingLabelColumn(other.to_string())),
    };
    if width < 2 {
        return Err(Error::InvalidDataset(
            "need at least one feature column besides the label".into(),
        ));
    }

    let mut rows: Vec<Vec<T>> = Vec::new();
    let mut labels = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        let row_no = r + 2;
        if record.len() != width {
            return Err(Error::Parse {
                row: row_no,
                column: record.len().min(width) + 1,
                message: format!("expected {width} columns, found {}", record.len()),
            });
        }
        let mut row = Vec::with_capacity(width - 1);
        for (c, cell) in record.iter().enumerate() {
            let v: T = cell.trim().parse().map_err(|_| Error::Parse {
                row: row_no,
                column: c + 1,
                message: format!("cannot parse `{cell}` as a real number"),
            })?;
            if c == label_idx {
                labels.push(v);
            } else {
                row.push(v);
            }
        }
        rows.push(row);
    }
    let names = header
        .into_iter()
        .enumerate()
        .filter(|(c, _)| *c != label_idx)
        .map(|(_, h)| h)
        .collect();
    Dataset::from_rows(&rows, labels)?.with_feature_names(names)
}

pub fn load_csv<T: Scalar>(path: impl AsRef<Path>, label: &LabelColumn) -> Result<Dataset<T>> {
    read_csv(File::open(path)?, label)
}

/// Per-feature centering and scaling learned by [`standardize`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationParams<T> {
    pub means: Vec<T>,
    /// Population standard deviations, 1 for constant columns.
    pub stds: Vec<T>,
}

impl<T: Scalar> StandardizationParams<T> {
    pub fn apply(&self, d: &Dataset<T>) -> Result<Dataset<T>> {
        if self.means.len() != d.p() {
            return Err(Error::DimensionMismatch {
                expected: d.p(),
                got: self.means.len(),
            });
        }
        let mut features = d.features.clone();
        for j in 0..d.p {
            let (m, s) = (self.means[j], self.stds[j]);
            for x in &mut features[j * d.n..(j + 1) * d.n] {
                *x = (*x - m) / s;
            }
        }
        Ok(Dataset {
            features,
            ..d.clone()
        })
    }
}

/// Centers every feature and scales it to unit population variance. Labels
/// are left untouched. Constant columns are centered and keep std 1.
pub fn standardize<T: Scalar>(d: &Dataset<T>) -> (Dataset<T>, StandardizationParams<T>) {
    let n = T::of_usize(d.n);
    let mut means = Vec::with_capacity(d.p);
    let mut stds = Vec::with_capacity(d.p);
    for j in 0..d.p {
        let col = d.column(j);
        let mean = col.iter().copied().sum::<T>() / n;
        let var = col.iter().map(|&x| (x - mean) * (x - mean)).sum::<T>() / n;
        let max_abs = col.iter().fold(T::zero(), |m, x| m.max(x.abs()));
        let std = var.sqrt();
        means.push(mean);
        stds.push(if std > T::epsilon() * max_abs {
            std
        } else {
            T::one()
        });
    }
    let params = StandardizationParams { means, stds };
    let out = params.apply(d).expect("params built from this dataset");
    (out, params)
}

/// Distribution of the nonzero coefficients of a synthetic regression.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ActiveWeights {
    Normal { std: f64 },
    Uniform { low: f64, high: f64 },
}

impl Default for ActiveWeights {
    fn default() -> Self {
        ActiveWeights::Normal { std: 1.0 }
    }
}

/// Sparse linear regression with standard normal features.
///
/// Features are independent unless `feature_correlation` is positive, in which
/// case every pair of features has that correlation (one shared factor per
/// row).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseRegression {
    pub n: usize,
    pub p: usize,
    pub k_active: usize,
    #[serde(default = "default_label_noise")]
    pub label_noise_std: f64,
    #[serde(default)]
    pub active_weights: ActiveWeights,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub feature_correlation: f64,
    #[serde(default)]
    pub seed: u64,
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

fn default_label_noise() -> f64 {
    1.0
}

impl SparseRegression {
    pub fn new(n: usize, p: usize, k_active: usize) -> Self {
        Self {
            n,
            p,
            k_active,
            label_noise_std: default_label_noise(),
            active_weights: ActiveWeights::default(),
            feature_correlation: 0.0,
            seed: 0,
        }
    }

    pub fn generate<T: Scalar>(&self) -> Result<(Dataset<T>, Vec<T>)> {
        let (n, p, k) = (self.n, self.p, self.k_active);
        if k > p {
            return Err(Error::TooManyActive { k_active: k, p });
        }
        if !(self.label_noise_std >= 0.0) {
            return Err(Error::InvalidDataset(
                "label noise std must be nonnegative".into(),
            ));
        }
        let rho = self.feature_correlation;
        if !(0.0..1.0).contains(&rho) {
            return Err(Error::InvalidDataset(
                "feature correlation must lie in [0, 1)".into(),
            ));
        }
        let mut rng = seeded(self.seed);
        let mut weights = vec![0.0f64; p];
        let mut active = index::sample(&mut rng, p, k).into_vec();
        active.sort_unstable();
        for &j in &active {
            weights[j] = match self.active_weights {
                ActiveWeights::Normal { std } => std * rng.sample::<f64, _>(StandardNormal),
                ActiveWeights::Uniform { low, high } => rng.random_range(low..=high),
            };
        }
        let mut columns = vec![0.0f64; n * p];
        for x in columns.iter_mut() {
            *x = StandardNormal.sample(&mut rng);
        }
        if rho > 0.0 {
            let shared: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            let (a, b) = ((1.0 - rho).sqrt(), rho.sqrt());
            for col in columns.chunks_mut(n) {
                for (x, &g) in col.iter_mut().zip(&shared) {
                    *x = a * *x + b * g;
                }
            }
        }
        let mut labels = vec![0.0f64; n];
        for &j in &active {
            let col = &columns[j * n..(j + 1) * n];
            for (y, &x) in labels.iter_mut().zip(col) {
                *y += weights[j] * x;
            }
        }
        if self.label_noise_std > 0.0 {
            for y in labels.iter_mut() {
                *y += self.label_noise_std * rng.sample::<f64, _>(StandardNormal);
            }
        }
        let cast = |v: Vec<f64>| v.into_iter().map(T::of).collect::<Vec<T>>();
        let d = Dataset::from_columns(n, p, cast(columns), cast(labels))?;
        Ok((d, cast(weights)))
    }
}

/// Sparse LASSO generator with the default coefficient distribution
/// (`N(0, 1)` on `k_active` uniformly chosen coordinates).
pub fn generate_sparse_lasso<T: Scalar>(
    n: usize,
    p: usize,
    k_active: usize,
    label_noise_std: f64,
    seed: u64,
) -> Result<(Dataset<T>, Vec<T>)> {
    SparseRegression {
        label_noise_std,
        seed,
        ..SparseRegression::new(n, p, k_active)
    }
    .generate()
}

/// Column-wise maximal absolute values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureBounds<T> {
    pub max_abs: Vec<T>,
}

pub fn feature_bounds<T: Scalar>(d: &Dataset<T>) -> FeatureBounds<T> {
    FeatureBounds {
        max_abs: (0..d.p)
            .map(|j| d.column(j).iter().fold(T::zero(), |m, x| m.max(x.abs())))
            .collect(),
    }
}
