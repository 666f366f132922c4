use std::path::Path;

use crate::checkpoint::{self, Frame, TEMPERATURE_MAGIC};
use crate::confidence::{sequence_confidence, ConfidenceScore};
use crate::error::{Error, Result};
use crate::math::{ln_one_minus_exp, log_softmax_at, softmax_with_log_at};
use crate::records::{Generation, TokenStep};
use crate::rng::Prng;

pub const MIN_TEMPERATURE: f64 = 1e-2;
pub const MAX_TEMPERATURE: f64 = 1e2;

/// Softmax temperature; logits are divided by it before normalization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Temperature(f64);

impl Temperature {
    pub fn new(value: f64) -> Result<Self> {
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "temperature must be positive and finite, got {value}"
            )));
        }
        Ok(Self(value))
    }

    pub fn identity() -> Self {
        Self(1.0)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn to_bytes(self) -> Vec<u8> {
        checkpoint::encode_frame(
            TEMPERATURE_MAGIC,
            &Frame {
                rows: 0,
                cols: 1,
                matrix: vec![],
                vector: vec![self.0 as f32],
            },
        )
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let f = checkpoint::decode_frame(TEMPERATURE_MAGIC, bytes)?;
        if f.rows != 0 || f.cols != 1 {
            return Err(Error::invalid(format!(
                "temperature checkpoint must be 0x1, found {}x{}",
                f.rows, f.cols
            )));
        }
        Self::new(f.vector[0] as f64)
    }

    pub fn save(self, path: &Path) -> Result<()> {
        checkpoint::write_bytes(path, &self.to_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&checkpoint::read_bytes(path)?)
    }
}

fn scaled_logits(step: &TokenStep, t: f64) -> Vec<f64> {
    let mut v = step.logits.values_f64();
    if t != 1.0 {
        for x in &mut v {
            *x /= t;
        }
    }
    v
}

fn target(step: &TokenStep) -> Result<usize> {
    step.logits
        .position_of(step.token_id)
        .ok_or_else(|| Error::invalid(format!("token {} has no stored logit", step.token_id)))
}

pub fn temperature_logprobs(gen: &Generation, t: Temperature) -> Result<Vec<f64>> {
    gen.steps
        .iter()
        .map(|s| Ok(log_softmax_at(&scaled_logits(s, t.0), target(s)?)))
        .collect()
}

pub fn temperature_confidence(gen: &Generation, t: Temperature) -> Result<ConfidenceScore> {
    sequence_confidence(&temperature_logprobs(gen, t)?)
}

/// Log-confidence at temperature `t` and its derivative with respect to `ln t`.
fn log_confidence_and_slope(gen: &Generation, t: f64) -> Result<(f64, f64)> {
    let mut lp_sum = 0.0;
    let mut slope_sum = 0.0;
    for step in &gen.steps {
        let z = scaled_logits(step, t);
        let pos = target(step)?;
        let (probs, lp) = softmax_with_log_at(&z, pos);
        let expected: f64 = probs.iter().zip(&z).map(|(p, v)| p * v).sum();
        lp_sum += lp;
        // d lp / d ln t = -(z_y - E_softmax[z])
        slope_sum -= z[pos] - expected;
    }
    let l = gen.steps.len() as f64;
    Ok(((lp_sum / l).min(0.0), slope_sum / l))
}

/// Keeps `ln(1 - c)` finite when `c` rounds to 1.
const MAX_LOG_CONFIDENCE: f64 = -1e-15;

fn bce_and_slope(gen: &Generation, label: bool, t: f64) -> Result<(f64, f64)> {
    let (log_c, dlog_c) = log_confidence_and_slope(gen, t)?;
    let log_c = log_c.min(MAX_LOG_CONFIDENCE);
    if label {
        Ok((-log_c, -dlog_c))
    } else {
        let log_1mc = ln_one_minus_exp(log_c);
        // d/dθ[-ln(1-c)] = c/(1-c) * dlog_c
        Ok((-log_1mc, (log_c - log_1mc).exp() * dlog_c))
    }
}

fn labeled<'a>(gens: &[&'a Generation]) -> Vec<(&'a Generation, bool)> {
    gens.iter()
        .filter_map(|g| g.correctness.map(|c| (*g, c)))
        .collect()
}

/// Mean binary cross-entropy between temperature-scaled confidence and the
/// correctness labels of the labeled generations.
pub fn temperature_bce(gens: &[&Generation], t: Temperature) -> Result<f64> {
    let data = labeled(gens);
    if data.is_empty() {
        return Err(Error::InvalidArgument("no labeled generations".into()));
    }
    let mut sum = 0.0;
    for (g, y) in &data {
        sum += bce_and_slope(g, *y, t.0)?.0;
    }
    Ok(sum / data.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemperatureFitConfig {
    pub learning_rate: f64,
    pub max_iters: usize,
    /// Minibatch size; `None` uses every labeled generation per step.
    pub batch_size: Option<usize>,
    pub seed: u64,
}

impl Default for TemperatureFitConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.5,
            max_iters: 2000,
            batch_size: None,
            seed: 0,
        }
    }
}

/// Gradient descent on `ln T` minimizing mean binary cross-entropy, starting
/// at `T = 1` and clamped to `[MIN_TEMPERATURE, MAX_TEMPERATURE]`.
pub fn fit_temperature(gens: &[&Generation], config: &TemperatureFitConfig) -> Result<Temperature> {
    let data = labeled(gens);
    if data.is_empty() {
        return Err(Error::InvalidArgument(
            "temperature fitting needs labeled generations".into(),
        ));
    }
    if !(config.learning_rate > 0.0) {
        return Err(Error::InvalidArgument("learning_rate must be positive".into()));
    }
    let (lo, hi) = (MIN_TEMPERATURE.ln(), MAX_TEMPERATURE.ln());
    let batch = config.batch_size.unwrap_or(data.len()).clamp(1, data.len());
    let mut rng = Prng::new(config.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut cursor = data.len();
    let mut theta = 0.0f64;
    for _ in 0..config.max_iters {
        let idx: Vec<usize> = if batch == data.len() {
            order.clone()
        } else {
            if cursor + batch > order.len() {
                rng.shuffle(&mut order);
                cursor = 0;
            }
            cursor += batch;
            order[cursor - batch..cursor].to_vec()
        };
        let mut grad = 0.0;
        for &i in &idx {
            let (g, y) = data[i];
            grad += bce_and_slope(g, y, theta.exp())?.1;
        }
        grad /= idx.len() as f64;
        let next = (theta - config.learning_rate * grad).clamp(lo, hi);
        let done = (next - theta).abs() < 1e-12;
        theta = next;
        if done {
            break;
        }
    }
    Temperature::new(theta.exp().clamp(MIN_TEMPERATURE, MAX_TEMPERATURE))
}
