mod common;

use common::*;
use litcal_core::baselines::{
    consistency_confidence, fit_temperature, pik_confidence, pik_train, temperature_bce, temperature_confidence,
    EquivalenceMatrix, PikConfig, PikProbe, Temperature, TemperatureFitConfig,
};
use litcal_core::confidence::sequence_confidence;
use litcal_core::records::{Generation, Logits, Role};
use litcal_core::rng::Prng;
use proptest::prelude::*;

/// Per-token softmax of `logits / t` by direct exponentiation.
fn oracle_confidence(gen: &Generation, t: f64) -> f64 {
    let mut product = 1.0;
    for step in &gen.steps {
        let Logits::Full(v) = &step.logits else { unreachable!() };
        let total: f64 = v.iter().map(|&x| (x as f64 / t).exp()).sum();
        product *= (v[step.token_id as usize] as f64 / t).exp() / total;
    }
    product.powf(1.0 / gen.steps.len() as f64)
}

#[test]
fn temperature_matches_per_token_oracle() {
    let mut rng = Prng::new(3);
    for i in 0..200 {
        let len = rng.between(1, 8);
        let g = random_generation(&mut rng, &format!("q{i}"), Role::Eval, 6, 1, len);
        for t in [0.5, 1.0, 2.0, 7.5] {
            let got = temperature_confidence(&g, Temperature::new(t).unwrap()).unwrap().value;
            assert!((got - oracle_confidence(&g, t)).abs() < 1e-6, "T={t}");
        }
        let base = sequence_confidence(&g.base_logprobs()).unwrap().log_value;
        let unit = temperature_confidence(&g, Temperature::identity()).unwrap().log_value;
        assert!((base - unit).abs() < 1e-9);
    }
}

#[test]
fn labels_drawn_from_base_confidence_keep_temperature_near_one() {
    let mut rng = Prng::new(8);
    let gens: Vec<Generation> = (0..3000)
        .map(|i| {
            let len = rng.between(1, 3);
            let mut g = random_generation(&mut rng, &format!("q{i}"), Role::Eval, 4, 1, len);
            let c = sequence_confidence(&g.base_logprobs()).unwrap().value;
            g.correctness = Some(rng.uniform() < c);
            g
        })
        .collect();
    let refs: Vec<&Generation> = gens.iter().collect();
    let t = fit_temperature(&refs, &TemperatureFitConfig::default()).unwrap().value();
    assert!((0.9..=1.1).contains(&t), "T = {t}");
    // grid oracle: the BCE minimum over [0.1, 10] also lies near 1
    let (best_t, _) = (0..=400)
        .map(|i| 10f64.powf(-1.0 + i as f64 / 200.0))
        .map(|v| (v, temperature_bce(&refs, Temperature::new(v).unwrap()).unwrap()))
        .fold((0.0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
    assert!((0.9..=1.1).contains(&best_t), "grid minimum at {best_t}");
}

/// Mean logistic loss of a probe.
fn logistic_loss(probe: &PikProbe, data: &[(Vec<f32>, bool)]) -> f64 {
    data.iter()
        .map(|(h, y)| {
            let z: f64 = probe.weights.iter().zip(h).map(|(w, &x)| w * x as f64).sum::<f64>() + probe.bias;
            let p = 1.0 / (1.0 + (-z).exp());
            if *y { -p.ln() } else { -(1.0 - p).ln() }
        })
        .sum::<f64>()
        / data.len() as f64
}

/// Logistic regression by Newton's method on raw features with an
/// intercept column, solving the normal equations by Gaussian elimination.
fn newton_logistic(data: &[(Vec<f32>, bool)]) -> PikProbe {
    let d = data[0].0.len() + 1;
    let mut beta = vec![0.0; d];
    let row = |h: &[f32]| -> Vec<f64> { h.iter().map(|&x| x as f64).chain([1.0]).collect() };
    for _ in 0..50 {
        let mut grad = vec![0.0; d];
        let mut hess = vec![vec![0.0; d]; d];
        for (h, y) in data {
            let x = row(h);
            let z: f64 = x.iter().zip(&beta).map(|(a, b)| a * b).sum();
            let p = 1.0 / (1.0 + (-z).exp());
            let r = p - if *y { 1.0 } else { 0.0 };
            for i in 0..d {
                grad[i] += r * x[i];
                for j in 0..d {
                    hess[i][j] += p * (1.0 - p) * x[i] * x[j];
                }
            }
        }
        // solve hess * delta = grad
        let mut a: Vec<Vec<f64>> = hess.iter().zip(&grad).map(|(r, g)| r.iter().copied().chain([*g]).collect()).collect();
        for col in 0..d {
            let pivot = (col..d).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
            a.swap(col, pivot);
            for r in 0..d {
                if r != col {
                    let f = a[r][col] / a[col][col];
                    for c in col..=d {
                        a[r][c] -= f * a[col][c];
                    }
                }
            }
        }
        for i in 0..d {
            beta[i] -= a[i][d] / a[i][i];
        }
    }
    PikProbe {
        weights: beta[..d - 1].to_vec(),
        bias: beta[d - 1],
    }
}

fn noisy_samples(rng: &mut Prng, n: usize) -> Vec<(Vec<f32>, bool)> {
    let truth = [1.5, -0.8, 0.0, 0.4];
    (0..n)
        .map(|_| {
            let h: Vec<f32> = (0..4).map(|k| (rng.normal() * (k + 1) as f64 + k as f64) as f32).collect();
            let z: f64 = truth.iter().zip(&h).map(|(w, &x)| w * x as f64).sum::<f64>() - 0.5;
            (h, rng.uniform() < 1.0 / (1.0 + (-z).exp()))
        })
        .collect()
}

#[test]
fn probe_reaches_the_logistic_regression_optimum() {
    let mut rng = Prng::new(21);
    let data = noisy_samples(&mut rng, 600);
    let probe = pik_train(&data, &PikConfig::default()).unwrap();
    let oracle = newton_logistic(&data);
    let (got, best) = (logistic_loss(&probe, &data), logistic_loss(&oracle, &data));
    assert!(got - best < 1e-4, "probe loss {got} vs optimum {best}");
    for (a, b) in probe.weights.iter().zip(&oracle.weights) {
        assert!((a - b).abs() < 0.05, "{a} vs {b}");
    }
}

#[test]
fn separable_probe_generalizes() {
    let mut rng = Prng::new(4);
    let mut sample = |n: usize| -> Vec<(Vec<f32>, bool)> {
        (0..n)
            .map(|_| {
                let h: Vec<f32> = (0..5).map(|_| rng.normal() as f32).collect();
                let y = h[0] > 0.0;
                (h, y)
            })
            .collect()
    };
    let (train, held_out) = (sample(400), sample(400));
    let probe = pik_train(&train, &PikConfig::default()).unwrap();
    let accuracy = held_out
        .iter()
        .filter(|(h, y)| (pik_confidence(h, &probe).unwrap() > 0.5) == *y)
        .count() as f64
        / held_out.len() as f64;
    assert!(accuracy > 0.95, "held-out accuracy {accuracy}");
}

proptest! {
    #[test]
    fn probe_confidence_is_the_logistic_function(
        w in prop::collection::vec(-3.0f64..3.0, 3),
        c in -3.0f64..3.0,
        h in prop::collection::vec(-3.0f32..3.0, 3),
    ) {
        let z: f64 = w.iter().zip(&h).map(|(a, &b)| a * b as f64).sum::<f64>() + c;
        let probe = PikProbe { weights: w, bias: c };
        let got = pik_confidence(&h, &probe).unwrap();
        prop_assert!((got - 1.0 / (1.0 + (-z).exp())).abs() < 1e-12);
    }

    #[test]
    fn components_match_union_find(n in 1usize..12, bits in prop::collection::vec(any::<bool>(), 144)) {
        let mut cells = vec![false; n * n];
        for i in 0..n {
            cells[i * n + i] = true;
            for j in i + 1..n {
                // sparse enough that several components are common
                let e = bits[i * 12 + j] && bits[j * 12 + i] && bits[(i + j) % 144];
                cells[i * n + j] = e;
                cells[j * n + i] = e;
            }
        }
        let m = EquivalenceMatrix::new(n, cells.clone()).unwrap();
        let expected = union_find_components(n, |i, j| cells[i * n + j]);
        prop_assert_eq!(m.components(), expected.clone());
        let (cluster, conf) = consistency_confidence(&m);
        let largest = expected.iter().map(Vec::len).max().unwrap();
        prop_assert_eq!(conf, largest as f64 / n as f64);
        let first_largest = expected.iter().position(|g| g.len() == largest).unwrap();
        prop_assert_eq!(cluster, expected[first_largest][0]);
        // the largest component size bounds confidence from below by 1/n
        prop_assert!(conf >= 1.0 / n as f64);
        let round = EquivalenceMatrix::parse(&m.to_text()).unwrap();
        prop_assert_eq!(round, m);
    }
}
