use std::path::Path;

use crate::checkpoint::{self, Frame, HEAD_MAGIC};
use crate::confidence::{sequence_confidence, ConfidenceScore};
use crate::error::{Error, Result};
use crate::math::{log_softmax_at, softmax_with_log_at};
use crate::records::{DatasetHeader, Generation, TokenStep};

/// Linear map from a hidden state to a per-vocabulary logit bias.
///
/// `weights` is `hidden_dim x vocab_size`, row-major; the bias added to logit
/// `v` is `sum_k weights[k][v] * hidden[k] + bias[v]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasHead {
    hidden_dim: usize,
    vocab_size: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl BiasHead {
    pub fn zeros(hidden_dim: usize, vocab_size: usize) -> Self {
        Self {
            hidden_dim,
            vocab_size,
            weights: vec![0.0; hidden_dim * vocab_size],
            bias: vec![0.0; vocab_size],
        }
    }

    pub fn for_header(header: &DatasetHeader) -> Self {
        Self::zeros(header.hidden_dim, header.vocab_size)
    }

    pub fn from_parts(
        hidden_dim: usize,
        vocab_size: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
    ) -> Result<Self> {
        if weights.len() != hidden_dim * vocab_size {
            return Err(Error::dims("head weights", hidden_dim * vocab_size, weights.len()));
        }
        if bias.len() != vocab_size {
            return Err(Error::dims("head bias", vocab_size, bias.len()));
        }
        if !weights.iter().chain(&bias).all(|x| x.is_finite()) {
            return Err(Error::invalid("head parameters must be finite"));
        }
        Ok(Self {
            hidden_dim,
            vocab_size,
            weights,
            bias,
        })
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden_dim
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn is_zero(&self) -> bool {
        self.weights.iter().chain(&self.bias).all(|&x| x == 0.0)
    }

    pub fn parameter_count(&self) -> u64 {
        parameter_count(self.hidden_dim, self.vocab_size)
    }

    /// Flat parameter view: weights row-major, then bias.
    pub(crate) fn param_mut(&mut self, index: usize) -> &mut f64 {
        let nw = self.weights.len();
        if index < nw {
            &mut self.weights[index]
        } else {
            &mut self.bias[index - nw]
        }
    }

    pub(crate) fn descend(&mut self, grad: &HeadGradient, step: f64) {
        for (w, g) in self.weights.iter_mut().zip(&grad.weights) {
            *w -= step * g;
        }
        for (b, g) in self.bias.iter_mut().zip(&grad.bias) {
            *b -= step * g;
        }
    }

    pub fn check_header(&self, header: &DatasetHeader) -> Result<()> {
        if header.hidden_dim != self.hidden_dim {
            return Err(Error::dims("head hidden_dim", header.hidden_dim, self.hidden_dim));
        }
        if header.vocab_size != self.vocab_size {
            return Err(Error::dims("head vocab_size", header.vocab_size, self.vocab_size));
        }
        Ok(())
    }

    fn check_step(&self, step: &TokenStep) -> Result<()> {
        if step.hidden.len() != self.hidden_dim {
            return Err(Error::dims("hidden state", self.hidden_dim, step.hidden.len()));
        }
        let cols = step.logits.adjustable_len();
        for p in 0..cols {
            let v = step.logits.vocab_index(p);
            if v >= self.vocab_size {
                return Err(Error::dims("logit column", self.vocab_size, v + 1));
            }
        }
        Ok(())
    }

    /// Bias for vocabulary column `v` given a hidden state.
    fn column_bias(&self, v: usize, hidden: &[f32]) -> f64 {
        let mut acc = 0.0;
        for (k, &h) in hidden.iter().enumerate() {
            acc += self.weights[k * self.vocab_size + v] * h as f64;
        }
        acc + self.bias[v]
    }

    /// Adjusted logits in the step's own layout: `V` values in full mode, or
    /// the `K` stored values followed by the unadjusted tail bucket.
    pub fn apply_bias(&self, step: &TokenStep) -> Result<Vec<f64>> {
        self.check_step(step)?;
        let mut values = step.logits.values_f64();
        for p in 0..step.logits.adjustable_len() {
            values[p] += self.column_bias(step.logits.vocab_index(p), &step.hidden);
        }
        Ok(values)
    }

    pub fn adjusted_logprob(&self, step: &TokenStep) -> Result<f64> {
        let values = self.apply_bias(step)?;
        let pos = target_position(step)?;
        Ok(log_softmax_at(&values, pos))
    }

    pub fn adjusted_logprobs(&self, gen: &Generation) -> Result<Vec<f64>> {
        gen.steps.iter().map(|s| self.adjusted_logprob(s)).collect()
    }

    pub fn adjusted_sequence_confidence(&self, gen: &Generation) -> Result<ConfidenceScore> {
        sequence_confidence(&self.adjusted_logprobs(gen)?)
    }

    /// Adds `scale * d(confidence)/d(params)` for `gen` into `grad` and returns
    /// the adjusted confidence.
    pub(crate) fn accumulate_confidence_gradient(
        &self,
        gen: &Generation,
        scale: f64,
        grad: &mut HeadGradient,
    ) -> Result<f64> {
        let len = gen.steps.len();
        let mut lps = Vec::with_capacity(len);
        let mut coefs: Vec<Vec<f64>> = Vec::with_capacity(len);
        for step in &gen.steps {
            let values = self.apply_bias(step)?;
            let pos = target_position(step)?;
            let (probs, lp) = softmax_with_log_at(&values, pos);
            lps.push(lp);
            let adjustable = step.logits.adjustable_len();
            let mut c: Vec<f64> = probs[..adjustable].iter().map(|s| -s).collect();
            c[pos] += 1.0;
            coefs.push(c);
        }
        let confidence = sequence_confidence(&lps)?.value;
        if scale == 0.0 {
            return Ok(confidence);
        }
        let factor = scale * confidence / len as f64;
        let v_size = self.vocab_size;
        for (step, c) in gen.steps.iter().zip(&coefs) {
            for (p, &coef) in c.iter().enumerate() {
                let v = step.logits.vocab_index(p);
                let g = factor * coef;
                grad.bias[v] += g;
                for (k, &h) in step.hidden.iter().enumerate() {
                    grad.weights[k * v_size + v] += g * h as f64;
                }
            }
        }
        Ok(confidence)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        checkpoint::encode_frame(
            HEAD_MAGIC,
            &Frame {
                rows: self.hidden_dim,
                cols: self.vocab_size,
                matrix: self.weights.iter().map(|&x| x as f32).collect(),
                vector: self.bias.iter().map(|&x| x as f32).collect(),
            },
        )
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let f = checkpoint::decode_frame(HEAD_MAGIC, bytes)?;
        Self::from_parts(
            f.rows,
            f.cols,
            f.matrix.into_iter().map(f64::from).collect(),
            f.vector.into_iter().map(f64::from).collect(),
        )
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        checkpoint::write_bytes(path, &self.to_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&checkpoint::read_bytes(path)?)
    }
}

fn target_position(step: &TokenStep) -> Result<usize> {
    step.logits.position_of(step.token_id).ok_or_else(|| {
        Error::invalid(format!(
            "token {} has no stored logit to score",
            step.token_id
        ))
    })
}

/// Gradient with the same shape as a [`BiasHead`].
#[derive(Debug, Clone, PartialEq)]
pub struct HeadGradient {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl HeadGradient {
    pub fn zeros_like(head: &BiasHead) -> Self {
        Self {
            weights: vec![0.0; head.weights.len()],
            bias: vec![0.0; head.bias.len()],
        }
    }

    pub fn flat(&self) -> impl Iterator<Item = f64> + '_ {
        self.weights.iter().chain(&self.bias).copied()
    }

    pub fn add_scaled(&mut self, other: &HeadGradient, scale: f64) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            *a += scale * b;
        }
        for (a, b) in self.bias.iter_mut().zip(&other.bias) {
            *a += scale * b;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.flat().all(|x| x == 0.0)
    }
}

/// Trainable parameters of a head over `hidden_dim` and `vocab_size`:
/// `H*V + V`.
pub fn parameter_count(hidden_dim: usize, vocab_size: usize) -> u64 {
    hidden_dim as u64 * vocab_size as u64 + vocab_size as u64
}

/// Head size relative to a base model's parameter count.
pub fn parameter_ratio(header: &DatasetHeader, base_parameters: f64) -> Result<f64> {
    if !(base_parameters.is_finite() && base_parameters > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "base parameter count must be positive, got {base_parameters}"
        )));
    }
    Ok(parameter_count(header.hidden_dim, header.vocab_size) as f64 / base_parameters)
}
