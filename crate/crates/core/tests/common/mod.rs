//! Helpers and reference implementations shared by the integration tests.
//!
//! The reference implementations are deliberately naive: direct products
//! instead of log-space sums, explicit edge scans instead of index
//! arithmetic, and brute-force enumeration.

#![allow(dead_code)]

use std::path::PathBuf;

use litcal_core::litcab::BiasHead;
use litcal_core::math::log_softmax_at;
use litcal_core::metrics::Prediction;
use litcal_core::records::{ByteSpan, Generation, Logits, QuestionGroup, Role, TokenStep};
use litcal_core::rng::Prng;

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

/// Generation over a full vocabulary with Gaussian logits and hidden states.
pub fn random_generation(rng: &mut Prng, qid: &str, role: Role, v: usize, h: usize, len: usize) -> Generation {
    let mut steps = Vec::with_capacity(len);
    let mut text = String::new();
    for t in 0..len {
        let logits: Vec<f32> = (0..v).map(|_| (2.0 * rng.normal()) as f32).collect();
        let hidden: Vec<f32> = (0..h).map(|_| rng.normal() as f32).collect();
        let token = rng.below(v) as u32;
        let values: Vec<f64> = logits.iter().map(|&x| x as f64).collect();
        if t > 0 {
            text.push(' ');
        }
        let start = text.len();
        text.push_str(&format!("w{token}"));
        steps.push(TokenStep {
            token_id: token,
            text: format!("w{token}"),
            char_span: ByteSpan::new(start, text.len()),
            base_logprob: log_softmax_at(&values, token as usize),
            logits: Logits::Full(logits),
            hidden,
        });
    }
    Generation {
        question_id: qid.into(),
        text,
        steps,
        correctness: Some(role == Role::Positive),
        role,
    }
}

/// A positive and one to three negatives, each of 1..=`max_len` tokens.
pub fn random_group(rng: &mut Prng, qid: &str, v: usize, h: usize, max_len: usize) -> QuestionGroup {
    let len = rng.between(1, max_len);
    let positive = random_generation(rng, qid, Role::Positive, v, h, len);
    let n_neg = rng.between(1, 3);
    let negatives = (0..n_neg)
        .map(|_| {
            let len = rng.between(1, max_len);
            random_generation(rng, qid, Role::Negative, v, h, len)
        })
        .collect();
    QuestionGroup {
        question_id: qid.into(),
        prompt: String::new(),
        positive,
        negatives,
    }
}

pub fn random_head(rng: &mut Prng, h: usize, v: usize, scale: f64) -> BiasHead {
    let weights = (0..h * v).map(|_| scale * rng.normal()).collect();
    let bias = (0..v).map(|_| scale * rng.normal()).collect();
    BiasHead::from_parts(h, v, weights, bias).unwrap()
}

/// Adjusted confidence as the plain product of softmax probabilities,
/// raised to `1/L`.
pub fn naive_confidence(gen: &Generation, weights: &[f64], bias: &[f64]) -> f64 {
    let v = bias.len();
    let mut product = 1.0;
    for step in &gen.steps {
        let Logits::Full(logits) = &step.logits else {
            panic!("naive oracle handles full logits only")
        };
        let z: Vec<f64> = (0..v)
            .map(|j| {
                let mut x = logits[j] as f64 + bias[j];
                for (k, &hk) in step.hidden.iter().enumerate() {
                    x += weights[k * v + j] * hk as f64;
                }
                x
            })
            .collect();
        let total: f64 = z.iter().map(|x| x.exp()).sum();
        product *= z[step.token_id as usize].exp() / total;
    }
    product.powf(1.0 / gen.steps.len() as f64)
}

pub fn naive_margin_loss(group: &QuestionGroup, weights: &[f64], bias: &[f64]) -> f64 {
    let pos = naive_confidence(&group.positive, weights, bias);
    group
        .negatives
        .iter()
        .map(|n| (1.0 + naive_confidence(n, weights, bias) - pos).max(0.0))
        .sum()
}

/// Central-difference gradient of the naive loss, parameters ordered as
/// weights then bias.
pub fn numeric_gradient(group: &QuestionGroup, weights: &[f64], bias: &[f64], step: f64) -> Vec<f64> {
    let nw = weights.len();
    let mut params: Vec<f64> = weights.iter().chain(bias).copied().collect();
    let mut out = Vec::with_capacity(params.len());
    for i in 0..params.len() {
        let original = params[i];
        params[i] = original + step;
        let up = naive_margin_loss(group, &params[..nw], &params[nw..]);
        params[i] = original - step;
        let down = naive_margin_loss(group, &params[..nw], &params[nw..]);
        params[i] = original;
        out.push((up - down) / (2.0 * step));
    }
    out
}

pub fn naive_ece(preds: &[Prediction]) -> f64 {
    let n = preds.len() as f64;
    let mut total = 0.0;
    for i in 0..10 {
        let lo = i as f64 / 10.0;
        let hi = (i + 1) as f64 / 10.0;
        let members: Vec<&Prediction> = preds
            .iter()
            .filter(|p| p.confidence >= lo && (p.confidence < hi || i == 9))
            .collect();
        if members.is_empty() {
            continue;
        }
        let m = members.len() as f64;
        let acc = members.iter().filter(|p| p.correct).count() as f64 / m;
        let conf = members.iter().map(|p| p.confidence).sum::<f64>() / m;
        total += m / n * (acc - conf).abs();
    }
    total
}

pub fn naive_brier(preds: &[Prediction]) -> f64 {
    preds
        .iter()
        .map(|p| {
            let y = if p.correct { 1.0 } else { 0.0 };
            (p.confidence - y) * (p.confidence - y)
        })
        .sum::<f64>()
        / preds.len() as f64
}

/// Correctness labels in ranked order, found by repeated selection of the
/// most confident remaining prediction (smallest id on ties, then
/// incorrect first).
pub fn naive_ranking(preds: &[Prediction]) -> Vec<bool> {
    let mut left: Vec<&Prediction> = preds.iter().collect();
    let mut out = Vec::new();
    while !left.is_empty() {
        let mut best = 0;
        for i in 1..left.len() {
            let (a, b) = (left[i], left[best]);
            let better = a.confidence > b.confidence
                || (a.confidence == b.confidence && (a.id < b.id || (a.id == b.id && !a.correct && b.correct)));
            if better {
                best = i;
            }
        }
        out.push(left.remove(best).correct);
    }
    out
}

/// acc@q for integer percentages, with `k = ceil(q*N/100)` in integer arithmetic.
pub fn naive_acc_at(preds: &[Prediction], q: u32) -> f64 {
    let n = preds.len();
    let k = ((q as usize * n).div_ceil(100)).max(1);
    let ranked = naive_ranking(preds);
    ranked[..k].iter().filter(|&&c| c).count() as f64 / k as f64
}

pub fn naive_cov_at(preds: &[Prediction], p: f64) -> f64 {
    let ranked = naive_ranking(preds);
    let n = ranked.len();
    let mut best = 0;
    for k in 1..=n {
        let correct = ranked[..k].iter().filter(|&&c| c).count();
        if correct as f64 / k as f64 >= p {
            best = k;
        }
    }
    best as f64 / n as f64
}

/// Random predictions with ids drawn from a small pool (so ties in id occur)
/// and confidences that include bin edges and repeated values.
pub fn random_predictions(rng: &mut Prng, n: usize) -> Vec<Prediction> {
    (0..n)
        .map(|_| {
            let confidence = match rng.below(4) {
                0 => rng.below(11) as f64 / 10.0,
                1 => [0.25, 0.5, 0.75][rng.below(3)],
                _ => rng.uniform(),
            };
            Prediction::new(format!("p{}", rng.below(n.max(2))), confidence, rng.uniform() < confidence)
        })
        .collect()
}

/// Connected components by union-find, as sorted member lists ordered by
/// smallest member.
pub fn union_find_components(n: usize, edge: impl Fn(usize, usize) -> bool) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while parent[r] != r {
            r = parent[r];
        }
        let mut y = x;
        while parent[y] != r {
            let next = parent[y];
            parent[y] = r;
            y = next;
        }
        r
    }
    for i in 0..n {
        for j in 0..n {
            if edge(i, j) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let roots: Vec<usize> = (0..n).map(|i| find(&mut parent, i)).collect();
    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
    for (i, &root) in roots.iter().enumerate() {
        match groups.iter_mut().find(|(r, _)| *r == root) {
            Some((_, g)) => g.push(i),
            None => groups.push((root, vec![i])),
        }
    }
    groups.into_iter().map(|(_, g)| g).collect()
}

/// Length of the longest common substring by checking every pair of start
/// positions.
pub fn brute_lcs_len(a: &[u8], b: &[u8]) -> usize {
    let mut best = 0;
    for i in 0..a.len() {
        for j in 0..b.len() {
            let mut k = 0;
            while i + k < a.len() && j + k < b.len() && a[i + k] == b[j + k] {
                k += 1;
            }
            best = best.max(k);
        }
    }
    best
}

/// Copy of `groups` with every logit multiplied by `factor` and the stored
/// log-probabilities recomputed to match.
pub fn scale_logits(groups: &[QuestionGroup], factor: f32) -> Vec<QuestionGroup> {
    let mut out = groups.to_vec();
    for g in &mut out {
        for gen in std::iter::once(&mut g.positive).chain(g.negatives.iter_mut()) {
            for step in &mut gen.steps {
                let Logits::Full(values) = &mut step.logits else {
                    panic!("expected full logits")
                };
                values.iter_mut().for_each(|x| *x *= factor);
                step.base_logprob = step.recomputed_logprob().unwrap();
            }
        }
    }
    out
}

/// Every generation of `groups` with its `question_id:index` identifier.
pub fn labeled(groups: &[QuestionGroup]) -> Vec<(String, &Generation)> {
    groups
        .iter()
        .flat_map(|g| g.generations().enumerate().map(move |(i, gen)| (format!("{}:{i}", g.question_id), gen)))
        .collect()
}
