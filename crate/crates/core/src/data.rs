//! Dataset representation, CSV ingestion, min-max scaling, and the
//! disjoint bag partition used for fitting.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A dense matrix of `n` points in `d` dimensions, stored row-major.
///
/// Every entry is finite; rows keep their construction order and are
/// addressed by index `0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    points: Vec<f64>,
    n: usize,
    d: usize,
}

impl Dataset {
    /// Build a dataset from a flat row-major buffer.
    pub fn from_flat(points: Vec<f64>, n: usize, d: usize) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::EmptyDataset(format!("n = {n}, d = {d}")));
        }
        if points.len() != n * d {
            return Err(Error::LengthMismatch(format!(
                "expected {} values, got {}",
                n * d,
                points.len()
            )));
        }
        for (idx, v) in points.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    row: idx / d,
                    column: format!("{}", idx % d),
                });
            }
        }
        Ok(Dataset { points, n, d })
    }

    /// Build a dataset from one `Vec` per row; all rows must share a length.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::EmptyDataset("no rows".into()));
        }
        let d = rows[0].len();
        for (i, r) in rows.iter().enumerate() {
            if r.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: r.len(),
                });
            }
            let _ = i;
        }
        let mut flat = Vec::with_capacity(n * d);
        for r in &rows {
            flat.extend_from_slice(r);
        }
        Dataset::from_flat(flat, n, d)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.points[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.d)
    }

    /// Copy the rows at `indices` into a new flat buffer.
    pub fn gather(&self, indices: &[usize]) -> Vec<f64> {
        let mut out = Vec::with_capacity(indices.len() * self.d);
        for &i in indices {
            out.extend_from_slice(self.row(i));
        }
        out
    }
}

/// A dataset with a binary anomaly label per row (1 = anomaly).
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub data: Dataset,
    pub labels: Vec<u8>,
}

impl LabeledDataset {
    pub fn new(data: Dataset, labels: Vec<u8>) -> Result<Self> {
        if labels.len() != data.n() {
            return Err(Error::LengthMismatch(format!(
                "{} labels for {} rows",
                labels.len(),
                data.n()
            )));
        }
        if let Some((row, &v)) = labels.iter().enumerate().find(|(_, &v)| v > 1) {
            return Err(Error::BadLabel {
                row,
                value: v as f64,
            });
        }
        Ok(LabeledDataset { data, labels })
    }
}

/// Result of loading a CSV file, depending on whether a label column
/// was requested.
#[derive(Debug, Clone)]
pub enum LoadedCsv {
    Plain(Dataset),
    Labeled(LabeledDataset),
}

/// Load a CSV file with a header row into a dataset.
///
/// All cells must be decimal numbers. When `label_column` is given, that
/// column is removed from the features and parsed as a 0/1 label.
pub fn load_csv(path: impl AsRef<Path>, label_column: Option<&str>) -> Result<LoadedCsv> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);

    let header: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let label_idx = match label_column {
        Some(name) => Some(
            header
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::MissingColumn(name.to_string()))?,
        ),
        None => None,
    };

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<u8> = Vec::new();
    for (row_idx, record) in reader.records().enumerate() {
        let record = record?;
        let mut row = Vec::with_capacity(header.len());
        for (col_idx, cell) in record.iter().enumerate() {
            let value: f64 = cell.trim().parse().map_err(|_| Error::Parse {
                row: row_idx,
                column: header
                    .get(col_idx)
                    .cloned()
                    .unwrap_or_else(|| format!("{col_idx}")),
                value: cell.to_string(),
            })?;
            if !value.is_finite() {
                return Err(Error::NonFinite {
                    row: row_idx,
                    column: header[col_idx].clone(),
                });
            }
            if Some(col_idx) == label_idx {
                if value != 0.0 && value != 1.0 {
                    return Err(Error::BadLabel {
                        row: row_idx,
                        value,
                    });
                }
                labels.push(value as u8);
            } else {
                row.push(value);
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::EmptyDataset(format!("{}", path.display())));
    }

    let data = Dataset::from_rows(rows)?;
    match label_idx {
        Some(_) => Ok(LoadedCsv::Labeled(LabeledDataset::new(data, labels)?)),
        None => Ok(LoadedCsv::Plain(data)),
    }
}

/// Per-feature affine transform mapping the fitted data into `[0,1]^d`.
///
/// Constant features map to 0.5.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleTransform {
    mins: Vec<f64>,
    maxs: Vec<f64>,
}

impl ScaleTransform {
    pub fn d(&self) -> usize {
        self.mins.len()
    }

    /// Transform a single point in place.
    pub fn apply_point(&self, point: &mut [f64]) {
        assert_eq!(point.len(), self.mins.len(), "point dimension mismatch");
        for (j, v) in point.iter_mut().enumerate() {
            let span = self.maxs[j] - self.mins[j];
            *v = if span == 0.0 {
                0.5
            } else {
                (*v - self.mins[j]) / span
            };
        }
    }
}

/// Record per-feature (min, max) over the dataset.
pub fn fit_scale(data: &Dataset) -> ScaleTransform {
    let d = data.d();
    let mut mins = vec![f64::INFINITY; d];
    let mut maxs = vec![f64::NEG_INFINITY; d];
    for row in data.rows() {
        for j in 0..d {
            mins[j] = mins[j].min(row[j]);
            maxs[j] = maxs[j].max(row[j]);
        }
    }
    ScaleTransform { mins, maxs }
}

/// Apply a fitted transform to a whole dataset.
///
/// Points outside the fitted range map outside `[0,1]^d`; distances stay
/// well-defined.
pub fn apply_scale(transform: &ScaleTransform, data: &Dataset) -> Dataset {
    assert_eq!(transform.d(), data.d(), "transform dimension mismatch");
    let mut points = data.points.clone();
    for row in points.chunks_exact_mut(data.d()) {
        transform.apply_point(row);
    }
    Dataset {
        points,
        n: data.n,
        d: data.d,
    }
}

/// `B` disjoint (fit, reference) index pairs covering the dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BagPartition {
    pairs: Vec<(Vec<usize>, Vec<usize>)>,
}

impl BagPartition {
    pub fn bag_count(&self) -> usize {
        self.pairs.len()
    }

    pub fn pairs(&self) -> &[(Vec<usize>, Vec<usize>)] {
        &self.pairs
    }

    /// Build a partition from explicit index lists, checking disjointness
    /// and the size rules.
    pub fn from_pairs(pairs: Vec<(Vec<usize>, Vec<usize>)>, n: usize) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::InvalidArgument("partition with zero bags".into()));
        }
        let mut seen = vec![false; n];
        let mut totals = Vec::with_capacity(pairs.len());
        for (fit, refs) in &pairs {
            if fit.len() < 2 || refs.len() < 2 {
                return Err(Error::InvalidArgument(
                    "each partition half needs at least 2 points".into(),
                ));
            }
            if fit.len().abs_diff(refs.len()) > 1 {
                return Err(Error::InvalidArgument(
                    "halves of a bag may differ by at most 1".into(),
                ));
            }
            for &i in fit.iter().chain(refs.iter()) {
                if i >= n {
                    return Err(Error::InvalidArgument(format!(
                        "index {i} out of range for n = {n}"
                    )));
                }
                if seen[i] {
                    return Err(Error::InvalidArgument(format!("index {i} used twice")));
                }
                seen[i] = true;
            }
            totals.push(fit.len() + refs.len());
        }
        let (min_t, max_t) = (
            *totals.iter().min().unwrap(),
            *totals.iter().max().unwrap(),
        );
        if max_t - min_t > 1 {
            return Err(Error::InvalidArgument(
                "bag totals may differ by at most 1".into(),
            ));
        }
        Ok(BagPartition { pairs })
    }
}

/// Randomly split `0..n` into `B` bags of size `⌊n/B⌋` or `⌊n/B⌋ + 1`,
/// each bag into a (fit, reference) pair whose sizes differ by at most 1.
///
/// Remainder points go to the earliest bags; within a bag the fit half
/// takes the extra point. Deterministic given the seed.
pub fn make_partition(n: usize, bags: usize, seed: u64) -> Result<BagPartition> {
    if bags == 0 {
        return Err(Error::InvalidArgument("bag count must be >= 1".into()));
    }
    if n < 4 * bags {
        return Err(Error::PartitionTooSmall { n, bags });
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let base = n / bags;
    let extra = n % bags;
    let mut pairs = Vec::with_capacity(bags);
    let mut offset = 0;
    for b in 0..bags {
        let size = base + usize::from(b < extra);
        let bag = &order[offset..offset + size];
        offset += size;
        let fit_len = size.div_ceil(2);
        pairs.push((bag[..fit_len].to_vec(), bag[fit_len..].to_vec()));
    }
    Ok(BagPartition { pairs })
}

/// Default bag count by sample size: 1 up to 10k rows, 5 up to 50k, 10 beyond.
pub fn auto_bag_count(n: usize) -> usize {
    if n <= 10_000 {
        1
    } else if n <= 50_000 {
        5
    } else {
        10
    }
}
