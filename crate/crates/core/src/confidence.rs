//! Sequence- and span-level confidence: the geometric mean of token
//! probabilities, computed as the exponentiated mean log-probability.

use crate::error::{Error, Result};
use crate::records::{ByteSpan, Generation};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfidenceScore {
    pub value: f64,
    pub log_value: f64,
    pub token_count: usize,
}

impl ConfidenceScore {
    fn from_log(log_value: f64, token_count: usize) -> Self {
        Self {
            value: log_value.exp(),
            log_value,
            token_count,
        }
    }
}

/// Geometric mean of the probabilities whose logs are given.
pub fn sequence_confidence(logprobs: &[f64]) -> Result<ConfidenceScore> {
    if logprobs.is_empty() {
        return Err(Error::InvalidArgument(
            "confidence of an empty token sequence".into(),
        ));
    }
    if let Some(bad) = logprobs.iter().find(|lp| !lp.is_finite() || **lp > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "log-probabilities must be finite and <= 0, got {bad}"
        )));
    }
    let mean = logprobs.iter().sum::<f64>() / logprobs.len() as f64;
    // Rounding in the mean can exceed 0 by an ulp only if every input is 0.
    Ok(ConfidenceScore::from_log(mean.min(0.0), logprobs.len()))
}

/// Indices of the steps whose byte span shares at least one byte with `range`.
pub fn overlapping_steps(gen: &Generation, range: ByteSpan) -> Vec<usize> {
    gen.steps
        .iter()
        .enumerate()
        .filter(|(_, s)| s.char_span.overlaps(&range))
        .map(|(i, _)| i)
        .collect()
}

/// Confidence over the tokens overlapping `range`, using the stored base
/// log-probabilities.
pub fn span_confidence(gen: &Generation, range: ByteSpan) -> Result<ConfidenceScore> {
    span_confidence_with(gen, range, &gen.base_logprobs())
}

/// As [`span_confidence`], but with caller-supplied per-step log-probabilities
/// (for example from a calibrated scorer).
pub fn span_confidence_with(
    gen: &Generation,
    range: ByteSpan,
    step_logprobs: &[f64],
) -> Result<ConfidenceScore> {
    if step_logprobs.len() != gen.steps.len() {
        return Err(Error::dims(
            "per-step log-probabilities",
            gen.steps.len(),
            step_logprobs.len(),
        ));
    }
    if range.end > gen.text.len() || range.start > range.end {
        return Err(Error::InvalidArgument(format!(
            "range {range} outside text of length {}",
            gen.text.len()
        )));
    }
    let selected: Vec<f64> = overlapping_steps(gen, range)
        .into_iter()
        .map(|i| step_logprobs[i])
        .collect();
    if selected.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "no tokens of {} overlap {range}",
            gen.question_id
        )));
    }
    sequence_confidence(&selected)
}
