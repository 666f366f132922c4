//! Claim-level calibration for paragraph generations.
//!
//! A judge extracts atomic claims from a paragraph and returns, for each
//! claim, the span of the paragraph it came from. Each span is mapped to the
//! sentence sharing the longest common substring with it, and the claim's
//! confidence is the geometric-mean token probability over that sentence.
//! The judge's correctness verdict supplies the label.

mod judge;
mod text;

use log::{info, warn};

use crate::confidence::{span_confidence_with, ConfidenceScore};
use crate::error::{Error, Result};
use crate::metrics::Prediction;
use crate::records::Generation;

pub use judge::{
    fixture_to_jsonl, FixtureJudge, FixtureRecord, JudgeClient, JudgeRequest, JudgeResponse,
    RequestKind,
};
pub use text::{longest_common_substring, map_span, split_sentences, Sentence};

#[derive(Debug, Clone, PartialEq)]
pub struct Claim {
    pub claim_text: String,
    pub returned_span: String,
    pub mapped_sentence: Option<usize>,
    pub confidence: Option<ConfidenceScore>,
    pub correct: Option<bool>,
}

impl Claim {
    pub fn new(claim_text: impl Into<String>, returned_span: impl Into<String>) -> Self {
        Self {
            claim_text: claim_text.into(),
            returned_span: returned_span.into(),
            mapped_sentence: None,
            confidence: None,
            correct: None,
        }
    }
}

/// Confidence of a mapped claim from the generation's base log-probabilities.
pub fn claim_confidence(gen: &Generation, claim: &Claim, sentences: &[Sentence]) -> Result<ConfidenceScore> {
    claim_confidence_with(gen, claim, sentences, &gen.base_logprobs())
}

pub fn claim_confidence_with(
    gen: &Generation,
    claim: &Claim,
    sentences: &[Sentence],
    step_logprobs: &[f64],
) -> Result<ConfidenceScore> {
    let idx = claim
        .mapped_sentence
        .ok_or_else(|| Error::InvalidArgument("claim has not been mapped to a sentence".into()))?;
    let sentence = sentences.get(idx).ok_or_else(|| {
        Error::InvalidArgument(format!("sentence {idx} out of range ({} sentences)", sentences.len()))
    })?;
    span_confidence_with(gen, sentence.char_range, step_logprobs)
}

/// A generation whose claims were dropped because a step failed.
#[derive(Debug)]
pub struct Diagnostic {
    pub generation: String,
    pub claim: Option<usize>,
    pub error: Error,
}

#[derive(Debug, Default)]
pub struct ClaimEvaluation {
    pub predictions: Vec<Prediction>,
    /// Scored claims, parallel to `predictions`.
    pub claims: Vec<Claim>,
    pub diagnostics: Vec<Diagnostic>,
}

impl ClaimEvaluation {
    pub fn judge_misses(&self) -> usize {
        self.diagnostics
            .iter()
            .filter(|d| matches!(d.error, Error::JudgeMiss { .. }))
            .count()
    }
}

fn tag(err: Error, generation: &str, claim: Option<usize>) -> Error {
    match err {
        Error::JudgeMiss { kind, hash, .. } => Error::JudgeMiss {
            kind,
            hash,
            generation: generation.into(),
            claim,
        },
        other => other,
    }
}

fn evaluate_one(
    gen: &Generation,
    judge: &dyn JudgeClient,
    step_logprobs: &[f64],
) -> std::result::Result<Vec<Claim>, (Option<usize>, Error)> {
    let id = gen.question_id.as_str();
    let claims = judge
        .extract_claims(&gen.text)
        .map_err(|e| (None, tag(e, id, None)))?;
    if claims.is_empty() {
        info!("generation {id}: judge extracted no claims");
        return Ok(Vec::new());
    }
    let sentences = split_sentences(&gen.text);
    let mut out = Vec::with_capacity(claims.len());
    for (i, text) in claims.into_iter().enumerate() {
        let fail = |e: Error| (Some(i), tag(e, id, Some(i)));
        let span = judge.locate_span(&gen.text, &text).map_err(fail)?;
        let mut claim = Claim::new(text, span);
        claim.mapped_sentence = Some(map_span(&sentences, &claim.returned_span).map_err(fail)?);
        claim.confidence =
            Some(claim_confidence_with(gen, &claim, &sentences, step_logprobs).map_err(fail)?);
        claim.correct = Some(
            judge
                .judge_claim(&gen.text, &claim.claim_text, None)
                .map_err(fail)?,
        );
        out.push(claim);
    }
    Ok(out)
}

/// Runs extraction, span mapping, scoring and judging over each generation.
///
/// `step_logprobs` supplies the per-token log-probabilities used for
/// confidence (base or calibrated). A failure on any claim drops that
/// generation's claims and records a diagnostic; other generations proceed.
/// Predictions are ordered by generation, then claim ordinal, with ids
/// `question_id:ordinal`.
pub fn evaluate_paragraphs<'a, F>(
    gens: impl IntoIterator<Item = &'a Generation>,
    judge: &dyn JudgeClient,
    mut step_logprobs: F,
) -> ClaimEvaluation
where
    F: FnMut(&Generation) -> Result<Vec<f64>>,
{
    let mut eval = ClaimEvaluation::default();
    for gen in gens {
        let result = step_logprobs(gen)
            .map_err(|e| (None, e))
            .and_then(|lp| evaluate_one(gen, judge, &lp));
        match result {
            Ok(claims) => {
                for (i, claim) in claims.into_iter().enumerate() {
                    let conf = claim.confidence.expect("scored").value;
                    eval.predictions.push(Prediction::new(
                        format!("{}:{i}", gen.question_id),
                        conf,
                        claim.correct.expect("judged"),
                    ));
                    eval.claims.push(claim);
                }
            }
            Err((claim, error)) => {
                warn!("generation {}: claims dropped: {error}", gen.question_id);
                eval.diagnostics.push(Diagnostic {
                    generation: gen.question_id.clone(),
                    claim,
                    error,
                });
            }
        }
    }
    eval
}
