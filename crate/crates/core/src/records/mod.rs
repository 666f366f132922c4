//! Inference-record data model, on-disk formats and train/validation splits.
//!
//! A dataset is a pair of files:
//!
//! - a line-oriented JSON text file: one header object, then one generation
//!   object per line (see [`text`]);
//! - a binary sidecar holding the per-token logits and hidden states that the
//!   text lines reference by byte offset (see [`sidecar`]).
//!
//! Training groups are stored as contiguous runs of lines: the positive
//! generation first, followed by its negatives. Generations with role `eval`
//! stand alone.

pub mod sidecar;
mod split;
pub mod text;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::log_softmax_at;

pub use split::split_train_val;
pub use text::{
    default_sidecar_path, encode_dataset, parse_dataset, read_dataset, write_dataset,
};

/// Maximum negatives stored per question group.
pub const MAX_NEGATIVES: usize = 3;

/// Allowed gap between a stored log-probability and the one recomputed from
/// the stored logits.
pub const LOGPROB_TOLERANCE: f64 = 1e-5;

/// Largest vocabulary for which top-K indices are exactly representable in
/// the sidecar's `f32` slots.
pub const MAX_TOPK_VOCAB: usize = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogitMode {
    Full,
    Topk(u32),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetHeader {
    pub vocab_size: usize,
    pub hidden_dim: usize,
    pub logit_mode: LogitMode,
    pub model_tag: String,
    pub task_tag: String,
}

impl DatasetHeader {
    pub fn full(vocab_size: usize, hidden_dim: usize) -> Self {
        Self {
            vocab_size,
            hidden_dim,
            logit_mode: LogitMode::Full,
            model_tag: String::new(),
            task_tag: String::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.vocab_size < 2 {
            return Err(Error::invalid(format!(
                "vocab_size must be at least 2, got {}",
                self.vocab_size
            )));
        }
        if self.hidden_dim < 1 {
            return Err(Error::invalid("hidden_dim must be at least 1"));
        }
        if let LogitMode::Topk(k) = self.logit_mode {
            let k = k as usize;
            if k < 1 || k >= self.vocab_size {
                return Err(Error::invalid(format!(
                    "topk mode needs 1 <= K < vocab_size, got K={k} with vocab_size={}",
                    self.vocab_size
                )));
            }
            if self.vocab_size > MAX_TOPK_VOCAB {
                return Err(Error::invalid(format!(
                    "topk mode supports vocab_size up to {MAX_TOPK_VOCAB}"
                )));
            }
        }
        Ok(())
    }

    /// Number of logit values per token, including the tail bucket in topk mode
    /// but excluding stored indices.
    pub fn logit_width(&self) -> usize {
        match self.logit_mode {
            LogitMode::Full => self.vocab_size,
            LogitMode::Topk(k) => k as usize + 1,
        }
    }

    /// Number of `f32` slots one token occupies in the sidecar.
    pub fn floats_per_step(&self) -> usize {
        let logits = match self.logit_mode {
            LogitMode::Full => self.vocab_size,
            LogitMode::Topk(k) => 2 * k as usize + 1,
        };
        logits + self.hidden_dim
    }
}

/// Half-open byte range `[start, end)` into a generation's text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ByteSpan {
    pub start: usize,
    pub end: usize,
}

impl ByteSpan {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    /// True when the two ranges share at least one byte.
    pub fn overlaps(&self, other: &ByteSpan) -> bool {
        self.start.max(other.start) < self.end.min(other.end)
    }
}

impl fmt::Display for ByteSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.start, self.end)
    }
}

/// Base-model logits for one generated token.
#[derive(Debug, Clone, PartialEq)]
pub enum Logits {
    Full(Vec<f32>),
    /// The K largest logits with their vocabulary indices, plus one tail
    /// bucket whose logit is the log-sum-exp of every omitted logit.
    TopK {
        indices: Vec<u32>,
        values: Vec<f32>,
        tail: f32,
    },
}

impl Logits {
    /// Logit values as `f64`, with the tail bucket last in topk mode.
    pub fn values_f64(&self) -> Vec<f64> {
        match self {
            Logits::Full(v) => v.iter().map(|&x| x as f64).collect(),
            Logits::TopK { values, tail, .. } => values
                .iter()
                .map(|&x| x as f64)
                .chain(std::iter::once(*tail as f64))
                .collect(),
        }
    }

    /// Vocabulary column feeding each non-tail entry of [`Logits::values_f64`].
    pub fn vocab_index(&self, position: usize) -> usize {
        match self {
            Logits::Full(_) => position,
            Logits::TopK { indices, .. } => indices[position] as usize,
        }
    }

    /// Number of adjustable (non-tail) entries.
    pub fn adjustable_len(&self) -> usize {
        match self {
            Logits::Full(v) => v.len(),
            Logits::TopK { indices, .. } => indices.len(),
        }
    }

    /// Position of `token_id` within [`Logits::values_f64`].
    pub fn position_of(&self, token_id: u32) -> Option<usize> {
        match self {
            Logits::Full(v) => ((token_id as usize) < v.len()).then_some(token_id as usize),
            Logits::TopK { indices, .. } => indices.iter().position(|&i| i == token_id),
        }
    }

    fn all_finite(&self) -> bool {
        match self {
            Logits::Full(v) => v.iter().all(|x| x.is_finite()),
            Logits::TopK { values, tail, .. } => {
                tail.is_finite() && values.iter().all(|x| x.is_finite())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TokenStep {
    pub token_id: u32,
    pub text: String,
    pub char_span: ByteSpan,
    pub logits: Logits,
    pub hidden: Vec<f32>,
    pub base_logprob: f64,
}

impl TokenStep {
    /// Log-probability of the token recomputed from the stored logits.
    pub fn recomputed_logprob(&self) -> Option<f64> {
        let pos = self.logits.position_of(self.token_id)?;
        Some(log_softmax_at(&self.logits.values_f64(), pos))
    }

    pub fn validate(&self, header: &DatasetHeader) -> Result<()> {
        let v = header.vocab_size;
        if self.token_id as usize >= v {
            return Err(Error::invalid(format!(
                "token_id {} out of range for vocab_size {v}",
                self.token_id
            )));
        }
        match (&self.logits, header.logit_mode) {
            (Logits::Full(values), LogitMode::Full) => {
                if values.len() != v {
                    return Err(Error::dims("full logits", v, values.len()));
                }
            }
            (Logits::TopK { indices, values, .. }, LogitMode::Topk(k)) => {
                let k = k as usize;
                if indices.len() != k || values.len() != k {
                    return Err(Error::dims("topk logits", k, indices.len().max(values.len())));
                }
                let mut seen = indices.clone();
                seen.sort_unstable();
                seen.dedup();
                if seen.len() != k {
                    return Err(Error::invalid("topk indices are not distinct"));
                }
                if let Some(bad) = indices.iter().find(|&&i| i as usize >= v) {
                    return Err(Error::invalid(format!(
                        "topk index {bad} out of range for vocab_size {v}"
                    )));
                }
                if !indices.contains(&self.token_id) {
                    return Err(Error::invalid(format!(
                        "token_id {} is not among the stored top-{k} logits",
                        self.token_id
                    )));
                }
            }
            _ => return Err(Error::invalid("logit layout does not match header logit_mode")),
        }
        if self.hidden.len() != header.hidden_dim {
            return Err(Error::dims("hidden state", header.hidden_dim, self.hidden.len()));
        }
        if !self.logits.all_finite() || !self.hidden.iter().all(|x| x.is_finite()) {
            return Err(Error::invalid("non-finite logit or hidden value"));
        }
        if !self.base_logprob.is_finite() || self.base_logprob > 0.0 {
            return Err(Error::invalid(format!(
                "logprob must be finite and <= 0, got {}",
                self.base_logprob
            )));
        }
        let recomputed = self
            .recomputed_logprob()
            .expect("token position checked above");
        if (recomputed - self.base_logprob).abs() > LOGPROB_TOLERANCE {
            return Err(Error::invalid(format!(
                "logprob {} disagrees with log-softmax of logits ({recomputed})",
                self.base_logprob
            )));
        }
        if self.char_span.start > self.char_span.end {
            return Err(Error::invalid(format!("inverted span {}", self.char_span)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Positive,
    Negative,
    Eval,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generation {
    pub question_id: String,
    pub text: String,
    pub steps: Vec<TokenStep>,
    pub correctness: Option<bool>,
    pub role: Role,
}

impl Generation {
    pub fn base_logprobs(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.base_logprob).collect()
    }

    pub fn validate(&self, header: &DatasetHeader) -> Result<()> {
        if self.steps.is_empty() {
            return Err(Error::invalid(format!(
                "generation for {} has no tokens",
                self.question_id
            )));
        }
        if self.correctness.is_none() && self.role != Role::Eval {
            return Err(Error::invalid(format!(
                "{:?} generation for {} lacks a correctness label",
                self.role, self.question_id
            )));
        }
        let mut prev_end = 0usize;
        for (i, step) in self.steps.iter().enumerate() {
            step.validate(header)
                .map_err(|e| prefix_error(e, &format!("token {i}: ")))?;
            let span = step.char_span;
            if span.start < prev_end {
                return Err(Error::invalid(format!(
                    "token {i}: span {span} overlaps or precedes previous token"
                )));
            }
            if span.end > self.text.len() {
                return Err(Error::invalid(format!(
                    "token {i}: span {span} exceeds text length {}",
                    self.text.len()
                )));
            }
            if !self.text.is_char_boundary(span.start) || !self.text.is_char_boundary(span.end) {
                return Err(Error::invalid(format!(
                    "token {i}: span {span} splits a UTF-8 character"
                )));
            }
            prev_end = span.end;
        }
        Ok(())
    }
}

fn prefix_error(err: Error, prefix: &str) -> Error {
    match err {
        Error::Validation { line, message } => Error::Validation {
            line,
            message: format!("{prefix}{message}"),
        },
        other => other,
    }
}

/// One question with its positive generation and sampled negatives.
#[derive(Debug, Clone, PartialEq)]
pub struct QuestionGroup {
    pub question_id: String,
    pub prompt: String,
    pub positive: Generation,
    pub negatives: Vec<Generation>,
}

impl QuestionGroup {
    pub fn validate(&self, header: &DatasetHeader) -> Result<()> {
        let qid = &self.question_id;
        if self.negatives.len() > MAX_NEGATIVES {
            return Err(Error::invalid(format!(
                "group {qid} has {} negatives (max {MAX_NEGATIVES})",
                self.negatives.len()
            )));
        }
        if self.positive.role != Role::Positive || self.positive.correctness != Some(true) {
            return Err(Error::invalid(format!(
                "group {qid}: positive must have role positive and correctness true"
            )));
        }
        for neg in &self.negatives {
            if neg.role != Role::Negative || neg.correctness != Some(false) {
                return Err(Error::invalid(format!(
                    "group {qid}: negatives must have role negative and correctness false"
                )));
            }
        }
        for gen in self.generations() {
            if &gen.question_id != qid {
                return Err(Error::invalid(format!(
                    "group {qid} contains a generation for {}",
                    gen.question_id
                )));
            }
            gen.validate(header)?;
        }
        Ok(())
    }

    /// Positive first, then negatives in stored order.
    pub fn generations(&self) -> impl Iterator<Item = &Generation> {
        std::iter::once(&self.positive).chain(self.negatives.iter())
    }

    pub fn is_trainable(&self) -> bool {
        !self.negatives.is_empty()
    }
}

/// A standalone generation awaiting or carrying evaluation labels.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRecord {
    pub prompt: String,
    pub generation: Generation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub header: DatasetHeader,
    pub groups: Vec<QuestionGroup>,
    pub evals: Vec<EvalRecord>,
}

impl Dataset {
    pub fn new(header: DatasetHeader, groups: Vec<QuestionGroup>) -> Self {
        Self {
            header,
            groups,
            evals: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.header.validate()?;
        let mut seen = std::collections::HashSet::new();
        for group in &self.groups {
            if !seen.insert(group.question_id.as_str()) {
                return Err(Error::invalid(format!(
                    "duplicate question_id {}",
                    group.question_id
                )));
            }
            group.validate(&self.header)?;
        }
        for rec in &self.evals {
            let gen = &rec.generation;
            if gen.role != Role::Eval {
                return Err(Error::invalid("standalone generations must have role eval"));
            }
            if !seen.insert(gen.question_id.as_str()) {
                return Err(Error::invalid(format!(
                    "duplicate question_id {}",
                    gen.question_id
                )));
            }
            gen.validate(&self.header)?;
        }
        Ok(())
    }

    /// Every generation with a stable identifier, in file order.
    ///
    /// Group members are named `<question_id>:<index>` (0 is the positive);
    /// standalone generations use their question id.
    pub fn labeled_view(&self) -> Vec<(String, &Generation)> {
        let mut out = Vec::new();
        for group in &self.groups {
            for (i, gen) in group.generations().enumerate() {
                out.push((format!("{}:{i}", group.question_id), gen));
            }
        }
        for rec in &self.evals {
            out.push((rec.generation.question_id.clone(), &rec.generation));
        }
        out
    }

    pub fn generation_count(&self) -> usize {
        self.groups.iter().map(|g| 1 + g.negatives.len()).sum::<usize>() + self.evals.len()
    }
}
