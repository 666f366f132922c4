//! A single entry point for scoring generations with any supported method.

use crate::baselines::{pik_confidence, temperature_confidence, temperature_logprobs, PikProbe, Temperature};
use crate::confidence::sequence_confidence;
use crate::error::{Error, Result};
use crate::litcab::BiasHead;
use crate::metrics::Prediction;
use crate::records::{DatasetHeader, Generation};

#[derive(Debug, Clone)]
pub enum Calibrator {
    /// Base model probabilities.
    None,
    LitCab(BiasHead),
    Temperature(Temperature),
    Pik(PikProbe),
}

impl Calibrator {
    pub fn name(&self) -> &'static str {
        match self {
            Calibrator::None => "none",
            Calibrator::LitCab(_) => "litcab",
            Calibrator::Temperature(_) => "temperature",
            Calibrator::Pik(_) => "pik",
        }
    }

    pub fn check_header(&self, header: &DatasetHeader) -> Result<()> {
        match self {
            Calibrator::LitCab(head) => head.check_header(header),
            Calibrator::Pik(probe) if probe.hidden_dim() != header.hidden_dim => {
                Err(Error::dims("probe hidden_dim", header.hidden_dim, probe.hidden_dim()))
            }
            _ => Ok(()),
        }
    }

    /// Per-token log-probabilities, for methods that adjust token
    /// distributions. The P(IK) probe scores whole generations only.
    pub fn step_logprobs(&self, gen: &Generation) -> Result<Vec<f64>> {
        match self {
            Calibrator::None => Ok(gen.base_logprobs()),
            Calibrator::LitCab(head) => head.adjusted_logprobs(gen),
            Calibrator::Temperature(t) => temperature_logprobs(gen, *t),
            Calibrator::Pik(_) => Err(Error::InvalidArgument(
                "the P(IK) probe does not produce token-level probabilities".into(),
            )),
        }
    }

    /// Confidence in `[0, 1]` together with its natural logarithm.
    pub fn confidence(&self, gen: &Generation) -> Result<(f64, f64)> {
        let score = match self {
            Calibrator::None => sequence_confidence(&gen.base_logprobs())?,
            Calibrator::LitCab(head) => head.adjusted_sequence_confidence(gen)?,
            Calibrator::Temperature(t) => temperature_confidence(gen, *t)?,
            Calibrator::Pik(probe) => {
                let first = gen
                    .steps
                    .first()
                    .ok_or_else(|| Error::invalid("generation has no steps"))?;
                let p = pik_confidence(&first.hidden, probe)?;
                return Ok((p, p.ln()));
            }
        };
        Ok((score.value, score.log_value))
    }
}

/// Scores labeled generations into predictions; unlabeled ones are skipped.
pub fn score_predictions<'a>(
    calibrator: &Calibrator,
    gens: impl IntoIterator<Item = (String, &'a Generation)>,
) -> Result<Vec<Prediction>> {
    let mut out = Vec::new();
    for (id, gen) in gens {
        if let Some(correct) = gen.correctness {
            out.push(Prediction::new(id, calibrator.confidence(gen)?.0, correct));
        }
    }
    Ok(out)
}
