//! Deterministic synthetic generations with a controllable miscalibration.
//!
//! Every candidate generation draws a latent probability of being correct
//! `pi ~ Beta(1, 3)` (clamped to `[0.02, 0.98]`) and its label from
//! `Bernoulli(pi)`. A fixed linear scorer over the first hidden state
//! recovers `logit(pi)` exactly, so correctness is a function of hidden
//! states. Token logits are built so the geometric-mean token probability
//! equals `pi`. Each question keeps the first correct candidate and the first
//! `negatives_per_question` incorrect ones; since `E[pi] = 1/4` matches the
//! 1:3 label mix, the base model is calibrated when
//! `miscalibration_strength = 0`.
//!
//! Miscalibration: half of the negatives (seeded) get the sampled token's
//! logit raised by `2 * strength` at every step, and their hidden states
//! carry a token-specific trace `hidden_scale * strength * g[token]`. A
//! linear head can learn to read that trace and undo the boost.

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::math::{log_softmax_at, log_sum_exp};
use crate::records::{
    split_train_val, ByteSpan, DatasetHeader, Generation, Logits, QuestionGroup, Role, TokenStep,
    MAX_NEGATIVES,
};
use crate::rng::Prng;

const PI_MIN: f64 = 0.02;
const PI_MAX: f64 = 0.98;
const TOKEN_PROB_MAX: f64 = 0.995;
/// Per-token spread of log-probabilities around their mean.
const JITTER: f64 = 0.4;
const BOOST_PER_STRENGTH: f64 = 2.0;
const BOOST_FRACTION: f64 = 0.5;
const HIDDEN_NOISE: f64 = 0.1;
/// Norm of the ground-truth scorer, relative to `1 / hidden_scale`.
const TRUTH_GAIN: f64 = 8.0;
const MAX_DRAWS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToyConfig {
    pub vocab_size: usize,
    pub hidden_dim: usize,
    pub n_questions: usize,
    pub seq_len_min: usize,
    pub seq_len_max: usize,
    pub negatives_per_question: usize,
    pub miscalibration_strength: f64,
    /// Magnitude of hidden-state components.
    pub hidden_scale: f64,
    /// Fraction of questions held out as the eval split.
    pub eval_fraction: f64,
    pub seed: u64,
}

impl Default for ToyConfig {
    fn default() -> Self {
        Self {
            vocab_size: 32,
            hidden_dim: 16,
            n_questions: 200,
            seq_len_min: 3,
            seq_len_max: 12,
            negatives_per_question: 3,
            miscalibration_strength: 1.0,
            hidden_scale: 768.0,
            eval_fraction: 0.25,
            seed: 0,
        }
    }
}

impl ToyConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::invalid(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.vocab_size < 2 {
            return bad(format!("vocab_size must be at least 2, got {}", self.vocab_size));
        }
        if self.vocab_size > 1 << 20 || self.hidden_dim > 1 << 16 {
            return bad("vocab_size or hidden_dim too large for a toy fixture".into());
        }
        if self.hidden_dim == 0 {
            return bad("hidden_dim must be positive".into());
        }
        if self.n_questions == 0 {
            return bad("n_questions must be positive".into());
        }
        if self.seq_len_min == 0 || self.seq_len_min > self.seq_len_max || self.seq_len_max > 4096 {
            return bad(format!(
                "seq_len range {}..={} is invalid",
                self.seq_len_min, self.seq_len_max
            ));
        }
        if !(1..=MAX_NEGATIVES).contains(&self.negatives_per_question) {
            return bad(format!(
                "negatives_per_question must be in 1..={MAX_NEGATIVES}, got {}",
                self.negatives_per_question
            ));
        }
        if !(self.miscalibration_strength >= 0.0 && self.miscalibration_strength <= 100.0) {
            return bad("miscalibration_strength must be in [0, 100]".into());
        }
        if !(self.hidden_scale > 0.0 && self.hidden_scale <= 1e6) {
            return bad("hidden_scale must be in (0, 1e6]".into());
        }
        if !(0.0..1.0).contains(&self.eval_fraction) {
            return bad("eval_fraction must be in [0, 1)".into());
        }
        Ok(())
    }

    pub fn header(&self) -> DatasetHeader {
        let mut h = DatasetHeader::full(self.vocab_size, self.hidden_dim);
        h.model_tag = "toylm".into();
        h.task_tag = format!("seed{}-strength{}", self.seed, self.miscalibration_strength);
        h
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyFixture {
    pub header: DatasetHeader,
    pub train: Vec<QuestionGroup>,
    pub eval: Vec<QuestionGroup>,
    /// Ids of negatives whose logits were boosted, as `question_id:index`.
    pub boosted: Vec<String>,
}

fn unit_vector(rng: &mut Prng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.normal()).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

struct World {
    /// Ground-truth scorer over the first hidden state.
    truth: Vec<f64>,
    traces: Vec<Vec<f64>>,
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

fn build_generation(
    config: &ToyConfig,
    world: &World,
    rng: &mut Prng,
    question_id: &str,
    pi: f64,
    correct: bool,
    boosted: bool,
) -> Generation {
    let (v, h) = (config.vocab_size, config.hidden_dim);
    let len = rng.between(config.seq_len_min, config.seq_len_max);
    let z: Vec<f64> = (0..len).map(|_| 2.0 * rng.uniform() - 1.0).collect();
    let z_mean = z.iter().sum::<f64>() / len as f64;
    let boost = if boosted {
        BOOST_PER_STRENGTH * config.miscalibration_strength
    } else {
        0.0
    };
    let trace_gain = if boosted {
        config.miscalibration_strength
    } else {
        0.0
    };

    let mut text = String::new();
    let mut steps = Vec::with_capacity(len);
    for (t, zt) in z.iter().enumerate() {
        let target = (pi.ln() * (1.0 + JITTER * (zt - z_mean))).exp().min(TOKEN_PROB_MAX);
        let token = rng.below(v);
        let mut logits64: Vec<f64> = (0..v).map(|_| rng.normal()).collect();
        let others: Vec<f64> = logits64
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != token)
            .map(|(_, &x)| x)
            .collect();
        logits64[token] = logit(target) + log_sum_exp(&others) + boost;
        let logits: Vec<f32> = logits64.iter().map(|&x| x as f32).collect();

        let mut hidden: Vec<f64> = (0..h)
            .map(|k| config.hidden_scale * (HIDDEN_NOISE * rng.normal() + trace_gain * world.traces[token][k]))
            .collect();
        if t == 0 {
            // place the first hidden state on the hyperplane truth . h = logit(pi)
            let norm2: f64 = world.truth.iter().map(|x| x * x).sum();
            let dot: f64 = world.truth.iter().zip(&hidden).map(|(a, b)| a * b).sum();
            let shift = (logit(pi) - dot) / norm2;
            for (x, w) in hidden.iter_mut().zip(&world.truth) {
                *x += shift * w;
            }
        }

        if t > 0 {
            text.push(' ');
        }
        let start = text.len();
        let word = format!("t{token}");
        text.push_str(&word);
        let as_f64: Vec<f64> = logits.iter().map(|&x| x as f64).collect();
        steps.push(TokenStep {
            token_id: token as u32,
            text: word,
            char_span: ByteSpan::new(start, text.len()),
            base_logprob: log_softmax_at(&as_f64, token),
            logits: Logits::Full(logits),
            hidden: hidden.into_iter().map(|x| x as f32).collect(),
        });
    }
    Generation {
        question_id: question_id.into(),
        text,
        steps,
        correctness: Some(correct),
        role: if correct { Role::Positive } else { Role::Negative },
    }
}

fn draw_pi(rng: &mut Prng) -> f64 {
    // inverse CDF of Beta(1, 3)
    (1.0 - (1.0 - rng.uniform()).cbrt()).clamp(PI_MIN, PI_MAX)
}

/// Generates a labeled dataset split into train and eval question groups.
///
/// The output is a pure function of `config`.
pub fn generate_fixture(config: &ToyConfig) -> Result<ToyFixture> {
    config.validate()?;
    let header = config.header();
    let mut rng = Prng::new(config.seed);
    let truth: Vec<f64> = unit_vector(&mut rng, config.hidden_dim)
        .into_iter()
        .map(|x| x * TRUTH_GAIN / config.hidden_scale)
        .collect();
    let traces = (0..config.vocab_size)
        .map(|_| unit_vector(&mut rng, config.hidden_dim))
        .collect();
    let world = World { truth, traces };

    let mut groups = Vec::with_capacity(config.n_questions);
    let mut boosted_ids = Vec::new();
    let mut skipped = 0usize;
    for q in 0..config.n_questions {
        let qid = format!("q{q:04}");
        let mut positive: Option<f64> = None;
        let mut negatives: Vec<f64> = Vec::new();
        for _ in 0..MAX_DRAWS {
            let pi = draw_pi(&mut rng);
            let correct = rng.uniform() < pi;
            if correct && positive.is_none() {
                positive = Some(pi);
            } else if !correct && negatives.len() < config.negatives_per_question {
                negatives.push(pi);
            }
            if positive.is_some() && negatives.len() == config.negatives_per_question {
                break;
            }
        }
        let Some(pos_pi) = positive.filter(|_| negatives.len() == config.negatives_per_question) else {
            skipped += 1;
            continue;
        };
        let positive = build_generation(config, &world, &mut rng, &qid, pos_pi, true, false);
        let mut negs = Vec::with_capacity(negatives.len());
        for (i, pi) in negatives.into_iter().enumerate() {
            let boosted = rng.uniform() < BOOST_FRACTION;
            if boosted && config.miscalibration_strength > 0.0 {
                boosted_ids.push(format!("{qid}:{}", i + 1));
            }
            negs.push(build_generation(config, &world, &mut rng, &qid, pi, false, boosted));
        }
        groups.push(QuestionGroup {
            question_id: qid.clone(),
            prompt: format!("question {q}"),
            positive,
            negatives: negs,
        });
    }
    if skipped > 0 {
        log::warn!("toy generator skipped {skipped} questions that never filled their candidates");
    }
    let (train, eval) = split_train_val(&groups, config.eval_fraction, rng.next_u64())?;
    for g in train.iter().chain(&eval) {
        g.validate(&header)?;
    }
    Ok(ToyFixture {
        header,
        train,
        eval,
        boosted: boosted_ids,
    })
}
