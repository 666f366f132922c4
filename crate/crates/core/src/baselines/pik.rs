//! Linear "P(I know)" probe on the hidden state of the question's last token.
//!
//! In a causal LM the hidden state that produces the logits of the first
//! generated token sits at the prompt's final position, so for exported
//! records the probe reads `steps[0].hidden`.

use std::path::Path;

use crate::checkpoint::{self, Frame, PROBE_MAGIC};
use crate::error::{Error, Result};
use crate::math::sigmoid;
use crate::rng::Prng;

#[derive(Debug, Clone, PartialEq)]
pub struct PikProbe {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl PikProbe {
    pub fn zeros(hidden_dim: usize) -> Self {
        Self {
            weights: vec![0.0; hidden_dim],
            bias: 0.0,
        }
    }

    pub fn hidden_dim(&self) -> usize {
        self.weights.len()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        checkpoint::encode_frame(
            PROBE_MAGIC,
            &Frame {
                rows: self.weights.len(),
                cols: 1,
                matrix: self.weights.iter().map(|&x| x as f32).collect(),
                vector: vec![self.bias as f32],
            },
        )
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let f = checkpoint::decode_frame(PROBE_MAGIC, bytes)?;
        if f.cols != 1 {
            return Err(Error::invalid(format!(
                "probe checkpoint must have one column, found {}",
                f.cols
            )));
        }
        Ok(Self {
            weights: f.matrix.into_iter().map(f64::from).collect(),
            bias: f.vector[0] as f64,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        checkpoint::write_bytes(path, &self.to_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&checkpoint::read_bytes(path)?)
    }
}

pub fn pik_confidence(hidden: &[f32], probe: &PikProbe) -> Result<f64> {
    if hidden.len() != probe.weights.len() {
        return Err(Error::dims("probe input", probe.weights.len(), hidden.len()));
    }
    let z: f64 = probe
        .weights
        .iter()
        .zip(hidden)
        .map(|(w, &h)| w * h as f64)
        .sum::<f64>()
        + probe.bias;
    // Keep strictly inside (0, 1) even where the logistic saturates in f64.
    Ok(sigmoid(z).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PikConfig {
    pub learning_rate: f64,
    pub max_iters: usize,
    /// Minibatch size; `None` uses the full dataset each step.
    pub batch_size: Option<usize>,
    pub seed: u64,
}

impl Default for PikConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.5,
            max_iters: 2000,
            batch_size: None,
            seed: 0,
        }
    }
}

/// Fits the probe by gradient descent on the mean logistic loss.
///
/// Features are standardized per dimension for the optimization and the
/// scaling is folded back into the returned weights.
pub fn pik_train(samples: &[(Vec<f32>, bool)], config: &PikConfig) -> Result<PikProbe> {
    let Some((first, _)) = samples.first() else {
        return Err(Error::InvalidArgument("probe training needs samples".into()));
    };
    let dim = first.len();
    if let Some((h, _)) = samples.iter().find(|(h, _)| h.len() != dim) {
        return Err(Error::dims("probe input", dim, h.len()));
    }
    let positives = samples.iter().filter(|(_, y)| *y).count();
    if positives == 0 || positives == samples.len() {
        return Err(Error::InvalidArgument(
            "probe training needs both correct and incorrect examples".into(),
        ));
    }
    let n = samples.len() as f64;
    let mut mean = vec![0.0; dim];
    for (h, _) in samples {
        for (m, &x) in mean.iter_mut().zip(h) {
            *m += x as f64;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut scale = vec![0.0; dim];
    for (h, _) in samples {
        for ((s, &x), m) in scale.iter_mut().zip(h).zip(&mean) {
            *s += (x as f64 - m).powi(2);
        }
    }
    for s in &mut scale {
        let sd = (*s / n).sqrt();
        *s = if sd > 0.0 { sd } else { 1.0 };
    }
    let features: Vec<Vec<f64>> = samples
        .iter()
        .map(|(h, _)| {
            h.iter()
                .zip(&mean)
                .zip(&scale)
                .map(|((&x, m), s)| (x as f64 - m) / s)
                .collect()
        })
        .collect();

    let batch = config.batch_size.unwrap_or(samples.len()).clamp(1, samples.len());
    let mut rng = Prng::new(config.seed);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut cursor = samples.len();
    let mut w = vec![0.0; dim];
    let mut c = 0.0;
    for _ in 0..config.max_iters {
        let idx: Vec<usize> = if batch == samples.len() {
            order.clone()
        } else {
            if cursor + batch > order.len() {
                rng.shuffle(&mut order);
                cursor = 0;
            }
            cursor += batch;
            order[cursor - batch..cursor].to_vec()
        };
        let mut gw = vec![0.0; dim];
        let mut gc = 0.0;
        for &i in &idx {
            let x = &features[i];
            let z: f64 = w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + c;
            let err = sigmoid(z) - if samples[i].1 { 1.0 } else { 0.0 };
            for (g, xi) in gw.iter_mut().zip(x) {
                *g += err * xi;
            }
            gc += err;
        }
        let step = config.learning_rate / idx.len() as f64;
        for (wi, g) in w.iter_mut().zip(&gw) {
            *wi -= step * g;
        }
        c -= step * gc;
    }
    // z = sum w_k (x_k - m_k)/s_k + c
    let weights: Vec<f64> = w.iter().zip(&scale).map(|(wi, s)| wi / s).collect();
    let bias = c - weights.iter().zip(&mean).map(|(wi, m)| wi * m).sum::<f64>();
    Ok(PikProbe { weights, bias })
}
