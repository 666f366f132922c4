//! Calibration and selective-classification metrics over `(confidence, correct)`
//! predictions.

mod predictions;
mod report;

use std::cmp::Ordering;

use crate::error::{Error, Result};

pub use predictions::{parse_predictions, read_predictions, write_predictions, predictions_to_csv};
pub use report::{BinStats, CalibrationReport};

pub const NUM_BINS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub id: String,
    pub confidence: f64,
    pub correct: bool,
}

impl Prediction {
    pub fn new(id: impl Into<String>, confidence: f64, correct: bool) -> Self {
        Self {
            id: id.into(),
            confidence,
            correct,
        }
    }
}

pub(crate) fn check(preds: &[Prediction]) -> Result<()> {
    if preds.is_empty() {
        return Err(Error::InvalidArgument("metrics need at least one prediction".into()));
    }
    if let Some(p) = preds.iter().find(|p| !(0.0..=1.0).contains(&p.confidence)) {
        return Err(Error::InvalidArgument(format!(
            "prediction {} has confidence {} outside [0, 1]",
            p.id, p.confidence
        )));
    }
    Ok(())
}

/// Bin `i` covers `[i/10, (i+1)/10)`; confidence 1.0 goes to the top bin.
pub fn bin_index(confidence: f64) -> usize {
    let mut i = ((confidence * NUM_BINS as f64).floor() as usize).min(NUM_BINS - 1);
    // guard against x*10 rounding across an edge
    if i > 0 && confidence < i as f64 / NUM_BINS as f64 {
        i -= 1;
    } else if i + 1 < NUM_BINS && confidence >= (i + 1) as f64 / NUM_BINS as f64 {
        i += 1;
    }
    i
}

/// Per-bin `(count, correct, confidence sum)`.
pub(crate) fn bin_totals(preds: &[Prediction]) -> [(usize, usize, f64); NUM_BINS] {
    let mut bins = [(0usize, 0usize, 0.0f64); NUM_BINS];
    for p in preds {
        let b = &mut bins[bin_index(p.confidence)];
        b.0 += 1;
        b.1 += p.correct as usize;
        b.2 += p.confidence;
    }
    bins
}

pub(crate) fn ece_from_totals(bins: &[(usize, usize, f64)], n: usize) -> f64 {
    bins.iter()
        .filter(|b| b.0 > 0)
        .map(|&(count, correct, conf_sum)| {
            let c = count as f64;
            (c / n as f64) * (correct as f64 / c - conf_sum / c).abs()
        })
        .sum()
}

pub fn ece(preds: &[Prediction]) -> Result<f64> {
    check(preds)?;
    Ok(ece_from_totals(&bin_totals(preds), preds.len()))
}

pub fn brier(preds: &[Prediction]) -> Result<f64> {
    check(preds)?;
    let sum: f64 = preds
        .iter()
        .map(|p| (p.confidence - if p.correct { 1.0 } else { 0.0 }).powi(2))
        .sum();
    Ok(sum / preds.len() as f64)
}

/// Confidence descending, then id ascending, then incorrect before correct.
pub(crate) fn ranked(preds: &[Prediction]) -> Vec<&Prediction> {
    let mut out: Vec<&Prediction> = preds.iter().collect();
    out.sort_by(|a, b| {
        b.confidence
            .partial_cmp(&a.confidence)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.id.cmp(&b.id))
            .then_with(|| a.correct.cmp(&b.correct))
    });
    out
}

/// Number of correct predictions in each ranked prefix, `prefix[k-1]` for length `k`.
pub(crate) fn prefix_correct(preds: &[Prediction]) -> Vec<usize> {
    let mut acc = 0;
    ranked(preds)
        .into_iter()
        .map(|p| {
            acc += p.correct as usize;
            acc
        })
        .collect()
}

/// Prefix length for the top `q` percent, rounded up and at least one.
pub fn prefix_len(q: f64, n: usize) -> usize {
    ((q * n as f64 / 100.0).ceil() as usize).clamp(1, n)
}

/// Accuracy of the most confident `q` percent of predictions.
pub fn acc_at_coverage(preds: &[Prediction], q: f64) -> Result<f64> {
    check(preds)?;
    if !(q > 0.0 && q <= 100.0) {
        return Err(Error::InvalidArgument(format!("q must be in (0, 100], got {q}")));
    }
    let k = prefix_len(q, preds.len());
    Ok(prefix_correct(preds)[k - 1] as f64 / k as f64)
}

/// Largest coverage fraction whose most confident prefix reaches accuracy `p`,
/// or 0 when no prefix does.
pub fn cov_at_accuracy(preds: &[Prediction], p: f64) -> Result<f64> {
    check(preds)?;
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("p must be in [0, 1], got {p}")));
    }
    let n = preds.len();
    let best = prefix_correct(preds)
        .iter()
        .enumerate()
        .filter(|&(i, &c)| c as f64 / (i + 1) as f64 >= p)
        .map(|(i, _)| i + 1)
        .max()
        .unwrap_or(0);
    Ok(best as f64 / n as f64)
}

pub fn reliability_report(preds: &[Prediction]) -> Result<CalibrationReport> {
    CalibrationReport::from_predictions(preds)
}
