//! Max-margin objective over a question group and its analytic gradient.
//!
//! For a positive `y` and negatives `y'`, with `c(.)` the adjusted sequence
//! confidence:
//!
//! ```text
//! loss = sum_{y'} max(0, 1 + c(y') - c(y))
//! ```
//!
//! `c = exp(mean_t log softmax(z_t)[y_t])`, so
//! `dc/dz_t = (c / L) * (onehot(y_t) - softmax(z_t))`, and `z_t` is linear in
//! the head parameters (`dz_t[v]/dW[k][v] = h_t[k]`, `dz_t[v]/db[v] = 1`).

use crate::error::{Error, Result};
use crate::records::QuestionGroup;

use super::head::{BiasHead, HeadGradient};

fn require_negatives(group: &QuestionGroup) -> Result<()> {
    if group.negatives.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "group {} has no negatives",
            group.question_id
        )));
    }
    Ok(())
}

fn hinge(positive: f64, negative: f64) -> f64 {
    (1.0 + negative - positive).max(0.0)
}

pub fn margin_loss(group: &QuestionGroup, head: &BiasHead) -> Result<f64> {
    require_negatives(group)?;
    let pos = head.adjusted_sequence_confidence(&group.positive)?.value;
    let mut loss = 0.0;
    for neg in &group.negatives {
        loss += hinge(pos, head.adjusted_sequence_confidence(neg)?.value);
    }
    Ok(loss)
}

/// Loss and its gradient with respect to the head parameters.
pub fn margin_loss_and_gradient(
    group: &QuestionGroup,
    head: &BiasHead,
) -> Result<(f64, HeadGradient)> {
    require_negatives(group)?;
    let mut grad = HeadGradient::zeros_like(head);
    let pos = head.adjusted_sequence_confidence(&group.positive)?.value;
    let mut loss = 0.0;
    let mut active = 0usize;
    for neg in &group.negatives {
        let c = head.adjusted_sequence_confidence(neg)?.value;
        let term = 1.0 + c - pos;
        if term > 0.0 {
            loss += term;
            active += 1;
            head.accumulate_confidence_gradient(neg, 1.0, &mut grad)?;
        }
    }
    if active > 0 {
        head.accumulate_confidence_gradient(&group.positive, -(active as f64), &mut grad)?;
    }
    Ok((loss, grad))
}

pub fn margin_loss_gradient(group: &QuestionGroup, head: &BiasHead) -> Result<HeadGradient> {
    margin_loss_and_gradient(group, head).map(|(_, g)| g)
}

/// Largest relative disagreement between the analytic gradient and central
/// finite differences, over every head parameter:
/// `|a - n| / max(|a|, |n|, 1e-8)`.
pub fn gradient_check(group: &QuestionGroup, head: &BiasHead, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let analytic: Vec<f64> = margin_loss_gradient(group, head)?.flat().collect();
    let mut probe = head.clone();
    let mut worst = 0.0f64;
    for (i, &a) in analytic.iter().enumerate() {
        let original = *probe.param_mut(i);
        *probe.param_mut(i) = original + epsilon;
        let up = margin_loss(group, &probe)?;
        *probe.param_mut(i) = original - epsilon;
        let down = margin_loss(group, &probe)?;
        *probe.param_mut(i) = original;
        let numeric = (up - down) / (2.0 * epsilon);
        let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
        worst = worst.max(err);
    }
    Ok(worst)
}
