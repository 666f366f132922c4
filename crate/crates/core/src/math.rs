//! Small numeric kernels shared across modules.

pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

/// `log softmax(values)[index]`.
pub fn log_softmax_at(values: &[f64], index: usize) -> f64 {
    values[index] - log_sum_exp(values)
}

/// Softmax probabilities and the log-probability at `index`, from one pass.
pub fn softmax_with_log_at(values: &[f64], index: usize) -> (Vec<f64>, f64) {
    let lse = log_sum_exp(values);
    let probs = values.iter().map(|v| (v - lse).exp()).collect();
    (probs, values[index] - lse)
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 - exp(x))` for `x <= 0`.
pub fn ln_one_minus_exp(x: f64) -> f64 {
    if x > -std::f64::consts::LN_2 {
        (-x.exp_m1()).ln()
    } else {
        (-x.exp()).ln_1p()
    }
}
