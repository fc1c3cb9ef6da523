//! The fitted model and scoring pipeline: per-bag weight selection on
//! the fit halves, reference indexes on the other halves, bagged
//! regularized k-distances, the derived density estimate, and top-m
//! anomaly flagging.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{apply_scale, fit_scale, make_partition, BagPartition, Dataset, ScaleTransform};
use crate::error::{Error, Result};
use crate::neighbors::{average_i_distances, NeighborIndex};
use crate::srm::{gamma_table, solve_srm, unit_ball_volume, WeightVector};

/// Distances are floored at this value in density evaluation only; raw
/// distance scores are never floored.
pub const DENSITY_DISTANCE_FLOOR: f64 = 1e-12;

const MODEL_FORMAT_VERSION: u32 = 1;

/// How many bags to fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BagCount {
    /// Pick by sample size (1 / 5 / 10, see [`crate::data::auto_bag_count`]).
    Auto,
    Fixed(usize),
}

#[derive(Debug, Clone)]
pub struct FitOptions {
    pub bags: BagCount,
    pub seed: u64,
    /// Min-max scale features into `[0,1]^d` before fitting (on by default).
    pub scale: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            bags: BagCount::Auto,
            seed: 0,
            scale: true,
        }
    }
}

struct Bag {
    weights: WeightVector,
    ref_points: Vec<f64>,
    ref_rows: Vec<usize>,
    s: usize,
    index: NeighborIndex,
}

/// A fitted model: per-bag weights and reference sets plus the shared
/// scale transform and calibration mixture.
pub struct BagModel {
    d: usize,
    n_train: usize,
    scale: Option<ScaleTransform>,
    gamma_mix: f64,
    unit_ball: f64,
    bags: Vec<Bag>,
}

/// Serialized form of [`BagModel`].
#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    d: usize,
    n: usize,
    b: usize,
    gamma_mix: f64,
    scale: Option<ScaleTransform>,
    bags: Vec<BagFile>,
}

#[derive(Serialize, Deserialize)]
struct BagFile {
    s: usize,
    mu: f64,
    weights: Vec<f64>,
    ref_rows: Vec<usize>,
    reference_points: Vec<Vec<f64>>,
}

/// Fit a model on a dataset (Dn is partitioned internally).
pub fn fit(data: &Dataset, options: &FitOptions) -> Result<BagModel> {
    let bags = match options.bags {
        BagCount::Auto => crate::data::auto_bag_count(data.n()),
        BagCount::Fixed(b) => b,
    };
    let partition = make_partition(data.n(), bags, options.seed)?;
    fit_with_partition(data, &partition, options.scale)
}

/// Fit with an explicit partition (the partition fixes which rows form
/// each fit/reference half).
pub fn fit_with_partition(
    data: &Dataset,
    partition: &BagPartition,
    scale: bool,
) -> Result<BagModel> {
    let transform = scale.then(|| fit_scale(data));
    let working = match &transform {
        Some(t) => apply_scale(t, data),
        None => data.clone(),
    };
    let b = partition.bag_count();
    let d = data.d();

    let fitted: Vec<(WeightVector, Vec<f64>, Vec<usize>)> = partition
        .pairs()
        .par_iter()
        .map(|(fit_idx, ref_idx)| {
            let fit_points = working.gather(fit_idx);
            let profile = average_i_distances(&fit_points, d)?;
            let weights = solve_srm(&profile, b)?;
            Ok((weights, working.gather(ref_idx), ref_idx.clone()))
        })
        .collect::<Result<_>>()?;

    BagModel::from_parts(d, data.n(), transform, fitted)
}

impl BagModel {
    /// Assemble a model from per-bag weights, reference points (in the
    /// model's scaled space), and the reference rows' original indices.
    pub fn from_parts(
        d: usize,
        n_train: usize,
        scale: Option<ScaleTransform>,
        parts: Vec<(WeightVector, Vec<f64>, Vec<usize>)>,
    ) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::InvalidArgument("model needs >= 1 bag".into()));
        }
        let b = parts.len();
        let mut bags = Vec::with_capacity(b);
        let mut gamma_sum = 0.0;
        for (weights, ref_points, ref_rows) in parts {
            if ref_points.len() % d != 0 {
                return Err(Error::LengthMismatch(format!(
                    "{} reference values do not form rows of dimension {d}",
                    ref_points.len()
                )));
            }
            let s = ref_points.len() / d;
            if ref_rows.len() != s {
                return Err(Error::LengthMismatch(format!(
                    "{} reference rows for {s} reference points",
                    ref_rows.len()
                )));
            }
            if ref_rows.iter().any(|&r| r >= n_train) {
                return Err(Error::InvalidArgument(
                    "reference row index out of range".into(),
                ));
            }
            let table = gamma_table(s, d);
            gamma_sum += weights
                .weights()
                .iter()
                .enumerate()
                .map(|(i, w)| w * table.value((i + 1).min(s)))
                .sum::<f64>();
            let index = NeighborIndex::build(&ref_points, d)?;
            bags.push(Bag {
                weights,
                ref_points,
                ref_rows,
                s,
                index,
            });
        }
        let gamma_mix = gamma_sum / b as f64;
        debug_assert!(gamma_mix > 0.0 && gamma_mix < 1.0);
        Ok(BagModel {
            d,
            n_train,
            scale,
            gamma_mix,
            unit_ball: unit_ball_volume(d),
            bags,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n_train(&self) -> usize {
        self.n_train
    }

    pub fn bag_count(&self) -> usize {
        self.bags.len()
    }

    pub fn scale(&self) -> Option<&ScaleTransform> {
        self.scale.as_ref()
    }

    /// `(1/B) Σ_b Σ_i w_i^b γ_{s_b,i}`, the calibration constant of the
    /// density estimate.
    pub fn gamma_mix(&self) -> f64 {
        self.gamma_mix
    }

    pub fn bag_weights(&self, bag: usize) -> &WeightVector {
        &self.bags[bag].weights
    }

    pub fn bag_size(&self, bag: usize) -> usize {
        self.bags[bag].s
    }

    pub fn bag_ref_rows(&self, bag: usize) -> &[usize] {
        &self.bags[bag].ref_rows
    }

    fn to_model_space(&self, point: &[f64]) -> Result<Vec<f64>> {
        if point.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: point.len(),
            });
        }
        let mut q = point.to_vec();
        if let Some(t) = &self.scale {
            t.apply_point(&mut q);
        }
        Ok(q)
    }

    /// Weighted distance from a (scaled) query to one bag's references.
    ///
    /// When self-exclusion leaves fewer neighbors than the weight cutoff
    /// needs, the unreachable ranks are saturated at the farthest
    /// available distance.
    fn bag_distance(&self, bag: &Bag, query: &[f64], exclude_pos: Option<usize>) -> f64 {
        let cutoff = bag.weights.cutoff();
        let effective = bag.s - usize::from(exclude_pos.is_some());
        let k = cutoff.min(effective);
        let dists = bag
            .index
            .knn_distances(query, k, exclude_pos)
            .expect("k is within range by construction");
        let w = bag.weights.weights();
        let mut acc = 0.0;
        for i in 0..k {
            acc += w[i] * dists[i];
        }
        if k < cutoff {
            let tail: f64 = w[k..].iter().sum();
            acc += tail * dists[k - 1];
        }
        acc
    }

    /// Regularized k-distance of `query` against bag `bag`. Pass the
    /// query's original row index to exclude an exact self-match from
    /// the bag's reference set.
    pub fn regularized_k_distance(
        &self,
        bag: usize,
        query: &[f64],
        exclude_row: Option<usize>,
    ) -> Result<f64> {
        if bag >= self.bags.len() {
            return Err(Error::InvalidArgument(format!(
                "bag {bag} out of range for {} bags",
                self.bags.len()
            )));
        }
        let q = self.to_model_space(query)?;
        let b = &self.bags[bag];
        let pos = exclude_row.and_then(|row| b.ref_rows.iter().position(|&r| r == row));
        Ok(self.bag_distance(b, &q, pos))
    }

    /// Bagged regularized k-distance of a fresh query point.
    pub fn bagged_distance(&self, query: &[f64]) -> Result<f64> {
        let q = self.to_model_space(query)?;
        let total: f64 = self
            .bags
            .iter()
            .map(|b| self.bag_distance(b, &q, None))
            .sum();
        Ok(total / self.bags.len() as f64)
    }

    /// Density estimate at a fresh query point:
    /// `gamma_mix^d / (V_d · max(R, floor)^d)`.
    pub fn brdde_density(&self, query: &[f64]) -> Result<f64> {
        let r = self.bagged_distance(query)?;
        Ok(self.density_from_distance(r))
    }

    fn density_from_distance(&self, r: f64) -> f64 {
        (self.gamma_mix / r.max(DENSITY_DISTANCE_FLOOR)).powi(self.d as i32) / self.unit_ball
    }

    /// Row -> (bag, reference position) lookup for self-exclusion.
    fn exclusion_map(&self) -> Vec<Option<(u32, u32)>> {
        let mut map = vec![None; self.n_train];
        for (b, bag) in self.bags.iter().enumerate() {
            for (pos, &row) in bag.ref_rows.iter().enumerate() {
                map[row] = Some((b as u32, pos as u32));
            }
        }
        map
    }

    fn score_rows(&self, data: &Dataset, exclusion: Option<&[Option<(u32, u32)>]>) -> Vec<f64> {
        let scaled = match &self.scale {
            Some(t) => apply_scale(t, data),
            None => data.clone(),
        };
        let rows: Vec<usize> = (0..data.n()).collect();
        let chunks: Vec<Vec<f64>> = rows
            .par_chunks(256)
            .map(|chunk| {
                chunk
                    .iter()
                    .map(|&i| {
                        let q = scaled.row(i);
                        let total: f64 = self
                            .bags
                            .iter()
                            .enumerate()
                            .map(|(b, bag)| {
                                let pos = exclusion
                                    .and_then(|m| m[i])
                                    .filter(|&(eb, _)| eb as usize == b)
                                    .map(|(_, p)| p as usize);
                                self.bag_distance(bag, q, pos)
                            })
                            .sum();
                        total / self.bags.len() as f64
                    })
                    .collect()
            })
            .collect();
        chunks.into_iter().flatten().collect()
    }

    /// Score the fitted dataset: every row of `data` must be the training
    /// row with the same index, so exact self-matches inside reference
    /// sets are left out.
    pub fn score(&self, data: &Dataset) -> Result<AnomalyScores> {
        if data.n() != self.n_train {
            return Err(Error::InvalidArgument(format!(
                "score expects the fitted dataset ({} rows), got {} rows; \
                 use score_fresh for new data",
                self.n_train,
                data.n()
            )));
        }
        if data.d() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: data.d(),
            });
        }
        let map = self.exclusion_map();
        Ok(AnomalyScores::from_scores(
            self.score_rows(data, Some(&map)),
        ))
    }

    /// Score previously unseen data (no self-exclusion).
    pub fn score_fresh(&self, data: &Dataset) -> Result<AnomalyScores> {
        if data.d() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: data.d(),
            });
        }
        Ok(AnomalyScores::from_scores(self.score_rows(data, None)))
    }

    /// Score the fitted dataset and flag the `m` highest-scoring rows.
    pub fn detect(&self, data: &Dataset, m: usize) -> Result<AnomalyScores> {
        self.score(data)?.flag_top(m)
    }

    /// Score the fitted dataset against a known anomaly density:
    /// `score_i = f1(x_i)^(1/d) · R(x_i)`. The prior is evaluated on the
    /// original (unscaled) rows and must be strictly positive.
    pub fn score_with_prior(
        &self,
        data: &Dataset,
        anomaly_density: impl Fn(&[f64]) -> f64,
    ) -> Result<AnomalyScores> {
        let base = self.score(data)?;
        let inv_d = 1.0 / self.d as f64;
        let mut scores = base.into_scores();
        for (i, s) in scores.iter_mut().enumerate() {
            let f1 = anomaly_density(data.row(i));
            if !(f1 > 0.0) || !f1.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "anomaly density must be strictly positive, got {f1} at row {i}"
                )));
            }
            *s *= f1.powf(inv_d);
        }
        Ok(AnomalyScores::from_scores(scores))
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            d: self.d,
            n: self.n_train,
            b: self.bags.len(),
            gamma_mix: self.gamma_mix,
            scale: self.scale.clone(),
            bags: self
                .bags
                .iter()
                .map(|bag| BagFile {
                    s: bag.s,
                    mu: bag.weights.mu(),
                    weights: bag.weights.weights().to_vec(),
                    ref_rows: bag.ref_rows.clone(),
                    reference_points: bag
                        .ref_points
                        .chunks_exact(self.d)
                        .map(|r| r.to_vec())
                        .collect(),
                })
                .collect(),
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(json)?;
        if file.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::ModelVersion(file.format_version));
        }
        if file.bags.len() != file.b {
            return Err(Error::LengthMismatch(format!(
                "model declares {} bags but stores {}",
                file.b,
                file.bags.len()
            )));
        }
        let parts = file
            .bags
            .into_iter()
            .map(|bag| {
                let weights = WeightVector::from_parts(bag.weights, bag.mu)?;
                let mut flat = Vec::with_capacity(bag.s * file.d);
                for row in &bag.reference_points {
                    if row.len() != file.d {
                        return Err(Error::DimensionMismatch {
                            expected: file.d,
                            got: row.len(),
                        });
                    }
                    flat.extend_from_slice(row);
                }
                Ok((weights, flat, bag.ref_rows))
            })
            .collect::<Result<Vec<_>>>()?;
        let model = BagModel::from_parts(file.d, file.n, file.scale, parts)?;
        if (model.gamma_mix - file.gamma_mix).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "stored gamma mixture {} disagrees with recomputed {}",
                file.gamma_mix, model.gamma_mix
            )));
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let json = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        BagModel::from_json(&json)
    }
}

/// Per-point scores with the descending rank order and anomaly flags.
#[derive(Debug, Clone, PartialEq)]
pub struct AnomalyScores {
    scores: Vec<f64>,
    order: Vec<usize>,
    flags: Vec<bool>,
}

impl AnomalyScores {
    /// Build from raw scores; the order ranks scores descending, ties by
    /// ascending row index. No rows are flagged.
    pub fn from_scores(scores: Vec<f64>) -> Self {
        debug_assert!(scores.iter().all(|s| s.is_finite() && *s >= 0.0));
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_unstable_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        let flags = vec![false; scores.len()];
        AnomalyScores {
            scores,
            order,
            flags,
        }
    }

    /// Flag the top `m` rows of the ranking.
    pub fn flag_top(mut self, m: usize) -> Result<Self> {
        if m > self.scores.len() {
            return Err(Error::InvalidArgument(format!(
                "cannot flag {m} anomalies among {} points",
                self.scores.len()
            )));
        }
        self.flags.fill(false);
        for &i in &self.order[..m] {
            self.flags[i] = true;
        }
        Ok(self)
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn into_scores(self) -> Vec<f64> {
        self.scores
    }

    /// Row indices ordered by descending score, ties by ascending index.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn flags(&self) -> &[bool] {
        &self.flags
    }

    pub fn flagged(&self) -> Vec<usize> {
        let m = self.flags.iter().filter(|&&f| f).count();
        self.order[..m].to_vec()
    }
}

/// Density estimate with caller-supplied simplex weights per bag
/// (uniform, measure-induced, single-atom, ...), evaluated against the
/// given reference indexes.
///
/// With one bag and weights concentrated at rank k this reduces to the
/// classic k-NN density estimate.
pub fn bwdde_density(
    indexes: &[NeighborIndex],
    weights: &[Vec<f64>],
    query: &[f64],
) -> Result<f64> {
    if indexes.is_empty() || indexes.len() != weights.len() {
        return Err(Error::LengthMismatch(format!(
            "{} indexes for {} weight vectors",
            indexes.len(),
            weights.len()
        )));
    }
    let d = indexes[0].d();
    if query.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: query.len(),
        });
    }
    let b = indexes.len();
    let mut dist_total = 0.0;
    let mut gamma_total = 0.0;
    for (index, w) in indexes.iter().zip(weights) {
        if index.d() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: index.d(),
            });
        }
        if w.is_empty() || w.len() > index.len() {
            return Err(Error::LengthMismatch(format!(
                "{} weights for {} references",
                w.len(),
                index.len()
            )));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > 1e-8 || w.iter().any(|&wi| wi < 0.0) {
            return Err(Error::NotSimplex(format!(
                "weights sum to {sum} with min {}",
                w.iter().cloned().fold(f64::INFINITY, f64::min)
            )));
        }
        let dists = index.knn_distances(query, w.len(), None)?;
        dist_total += w.iter().zip(&dists).map(|(wi, di)| wi * di).sum::<f64>();
        let table = gamma_table(index.len(), d);
        gamma_total += w
            .iter()
            .enumerate()
            .map(|(i, wi)| wi * table.value(i + 1))
            .sum::<f64>();
    }
    let r = dist_total / b as f64;
    let gamma = gamma_total / b as f64;
    Ok((gamma / r.max(DENSITY_DISTANCE_FLOOR)).powi(d as i32) / unit_ball_volume(d))
}
