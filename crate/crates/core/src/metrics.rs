//! Classification metrics (test set) and kernel metrics (training Gram).
//!
//! `margin` here is the geometric quantity: the smallest feature-space distance
//! between two training points of different classes. It is not the SVM's
//! functional margin.
//!
//! The spectral ratio is reported in two forms. The raw ratio
//! `tr(K) / ‖K‖_F` equals `√M` on the identity and 1 on the all-ones matrix.
//! The normalised ratio `tr(K)² / (M ‖K‖_F²)` (the raw ratio squared over
//! `M`) ranges over `[1/M, 1]` for unit-diagonal Grams: exactly 1 for the
//! delta kernel and `1/M` for the constant kernel. Reports use the normalised
//! form.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::kernels::GramMatrix;
use crate::labels::class_counts;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub accuracy: f64,
    pub aucroc: f64,
    pub margin: f64,
    pub spectral_ratio: f64,
    pub spectral_ratio_raw: f64,
}

impl MetricsRecord {
    pub const NAMES: [&'static str; 5] =
        ["accuracy", "aucroc", "margin", "spectral_ratio", "spectral_ratio_raw"];

    pub fn get(&self, name: &str) -> Option<f64> {
        match name {
            "accuracy" => Some(self.accuracy),
            "aucroc" => Some(self.aucroc),
            "margin" => Some(self.margin),
            "spectral_ratio" => Some(self.spectral_ratio),
            "spectral_ratio_raw" => Some(self.spectral_ratio_raw),
            _ => None,
        }
    }

    /// Classification metrics from test predictions and scores, kernel metrics
    /// from the combined training Gram.
    pub fn evaluate(
        predicted: &[i8],
        scores: &[f64],
        test_labels: &[i8],
        train_gram: &GramMatrix,
        train_labels: &[i8],
    ) -> Result<Self> {
        let (spectral_ratio, spectral_ratio_raw) = spectral_ratio(train_gram)?;
        Ok(Self {
            accuracy: accuracy(predicted, test_labels)?,
            aucroc: aucroc(scores, test_labels)?,
            margin: margin(train_gram, train_labels)?,
            spectral_ratio,
            spectral_ratio_raw,
        })
    }
}

/// Fraction of matching labels.
pub fn accuracy(predicted: &[i8], actual: &[i8]) -> Result<f64> {
    if actual.is_empty() {
        return Err(Error::Argument("accuracy of an empty set".into()));
    }
    check_dim(actual.len(), predicted.len())?;
    let hits = predicted.iter().zip(actual).filter(|(p, a)| p == a).count();
    Ok(hits as f64 / actual.len() as f64)
}

/// Area under the ROC curve as the Mann–Whitney statistic, ties counting ½.
pub fn aucroc(scores: &[f64], actual: &[i8]) -> Result<f64> {
    check_dim(actual.len(), scores.len())?;
    let (pos, neg) = class_counts(actual)
        .map_err(|_| Error::UndefinedMetric("AUCROC needs both classes".into()))?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // average 1-based ranks over tie groups
    let mut rank_sum_pos = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        let avg_rank = (start + 1 + end) as f64 / 2.0;
        let positives = order[start..end].iter().filter(|&&i| actual[i] == 1).count();
        rank_sum_pos += avg_rank * positives as f64;
        start = end;
    }
    let (p, n) = (pos as f64, neg as f64);
    Ok((rank_sum_pos - p * (p + 1.0) / 2.0) / (p * n))
}

/// `min √(K_ii + K_jj − 2K_ij)` over pairs with different labels.
pub fn margin(gram: &GramMatrix, labels: &[i8]) -> Result<f64> {
    check_dim(gram.size(), labels.len())?;
    class_counts(labels).map_err(|_| Error::UndefinedMetric("margin needs both classes".into()))?;
    let k = gram.entries();
    let mut best = f64::INFINITY;
    for i in 0..labels.len() {
        for j in 0..labels.len() {
            if labels[i] == 1 && labels[j] == -1 {
                let sq = (k[(i, i)] + k[(j, j)] - 2.0 * k[(i, j)]).max(0.0);
                best = best.min(sq);
            }
        }
    }
    Ok(best.sqrt())
}

/// `(normalised, raw)` spectral ratios.
pub fn spectral_ratio(gram: &GramMatrix) -> Result<(f64, f64)> {
    let k = gram.entries();
    let frob_sq: f64 = k.iter().map(|v| v * v).sum();
    if frob_sq == 0.0 {
        return Err(Error::Degenerate("spectral ratio of a zero matrix".into()));
    }
    let trace = gram.trace();
    let m = gram.size() as f64;
    Ok((trace * trace / (m * frob_sq), trace / frob_sq.sqrt()))
}
