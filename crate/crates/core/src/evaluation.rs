//! Metrics: AUC via the rank-statistic formulation, mean absolute error
//! against a reference density, and rank-sum tables across configurations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One evaluation record, emitted as a JSON line by the CLI.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub auc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mae: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sr: Option<f64>,
    pub runtime_ms: f64,
    pub config: ReportConfig,
}

/// Configuration echo attached to every report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportConfig {
    pub n: usize,
    pub d: usize,
    pub bags: usize,
    pub seed: u64,
}

impl MetricReport {
    pub fn validate(&self) -> Result<()> {
        if let Some(a) = self.auc {
            if !(0.0..=1.0).contains(&a) {
                return Err(Error::InvalidArgument(format!("auc {a} outside [0,1]")));
            }
        }
        for (name, v) in [("mae", self.mae), ("sr", self.sr)] {
            if let Some(v) = v {
                if !(v >= 0.0) {
                    return Err(Error::InvalidArgument(format!("{name} {v} negative")));
                }
            }
        }
        Ok(())
    }
}

/// Midranks (1-based, ties averaged) of `values` under the given order.
fn midranks(values: &[f64], descending: bool) -> Vec<f64> {
    let n = values.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_unstable_by(|&a, &b| {
        let ord = values[a].total_cmp(&values[b]);
        if descending {
            ord.reverse()
        } else {
            ord
        }
    });
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let avg = (i + j + 2) as f64 / 2.0; // positions are 1-based
        for &k in &idx[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Probability that a random anomaly (label 1) is scored above a random
/// normal point, counting ties as 1/2. Computed in O(n log n) from rank
/// sums.
pub fn auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch(format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    let positives = labels.iter().filter(|&&l| l == 1).count();
    let negatives = labels.iter().filter(|&&l| l == 0).count();
    if positives + negatives != labels.len() {
        return Err(Error::InvalidArgument("labels must be 0 or 1".into()));
    }
    if positives == 0 || negatives == 0 {
        return Err(Error::SingleClass);
    }
    let ranks = midranks(scores, false);
    let rank_sum: f64 = ranks
        .iter()
        .zip(labels)
        .filter(|(_, &l)| l == 1)
        .map(|(r, _)| r)
        .sum();
    let u = rank_sum - (positives * (positives + 1)) as f64 / 2.0;
    Ok(u / (positives as f64 * negatives as f64))
}

/// Mean absolute error between two equal-length vectors.
pub fn mae(estimates: &[f64], truths: &[f64]) -> Result<f64> {
    if estimates.is_empty() || estimates.len() != truths.len() {
        return Err(Error::LengthMismatch(format!(
            "{} estimates for {} truths",
            estimates.len(),
            truths.len()
        )));
    }
    Ok(estimates
        .iter()
        .zip(truths)
        .map(|(e, t)| (e - t).abs())
        .sum::<f64>()
        / estimates.len() as f64)
}

/// Per-config rank sums over a [dataset x config] AUC matrix.
///
/// Within each dataset the best AUC gets rank 1; ties share the average
/// rank. Every cell must carry an AUC.
pub fn rank_table(reports: &[Vec<MetricReport>]) -> Result<Vec<f64>> {
    if reports.is_empty() || reports[0].is_empty() {
        return Err(Error::EmptyDataset("empty report matrix".into()));
    }
    let configs = reports[0].len();
    let mut sums = vec![0.0; configs];
    for (row_idx, row) in reports.iter().enumerate() {
        if row.len() != configs {
            return Err(Error::LengthMismatch(format!(
                "row {row_idx} has {} configs, expected {configs}",
                row.len()
            )));
        }
        let aucs: Vec<f64> = row
            .iter()
            .map(|r| {
                r.auc.ok_or_else(|| {
                    Error::InvalidArgument(format!("missing AUC in row {row_idx}"))
                })
            })
            .collect::<Result<_>>()?;
        for (sum, rank) in sums.iter_mut().zip(midranks(&aucs, true)) {
            *sum += rank;
        }
    }
    Ok(sums)
}
