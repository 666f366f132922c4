mod common;

use common::*;
use litcal_core::litcab::{
    gradient_check, margin_loss, mean_margin_loss, train, train_with_holdout, BiasHead, TrainConfig,
    DEFAULT_VAL_FRACTION,
};
use litcal_core::rng::Prng;
use litcal_core::toylm::{generate_fixture, ToyConfig};
use proptest::prelude::*;

fn small_fixture(seed: u64) -> litcal_core::toylm::ToyFixture {
    generate_fixture(&ToyConfig {
        n_questions: 60,
        seed,
        ..ToyConfig::default()
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn loss_matches_naive_product_form(seed in any::<u64>(), scale in 0.0f64..1.0) {
        let mut rng = Prng::new(seed);
        let group = random_group(&mut rng, "q", 5, 3, 4);
        let head = random_head(&mut rng, 3, 5, scale);
        let lib = margin_loss(&group, &head).unwrap();
        let naive = naive_margin_loss(&group, head.weights(), head.bias());
        prop_assert!((lib - naive).abs() < 1e-12, "{lib} vs {naive}");
    }

    #[test]
    fn analytic_gradient_matches_finite_differences(seed in any::<u64>(), scale in 0.0f64..1.0) {
        let mut rng = Prng::new(seed);
        let group = random_group(&mut rng, "q", 5, 3, 4);
        let head = random_head(&mut rng, 3, 5, scale);
        prop_assert!(gradient_check(&group, &head, 1e-5).unwrap() < 1e-4);
    }

    #[test]
    fn zero_head_adjusted_equals_base(seed in any::<u64>()) {
        let mut rng = Prng::new(seed);
        let group = random_group(&mut rng, "q", 7, 2, 6);
        let head = BiasHead::zeros(2, 7);
        for g in group.generations() {
            prop_assert_eq!(head.adjusted_logprobs(g).unwrap(), g.base_logprobs());
        }
    }
}

#[test]
fn zero_epochs_returns_zero_head() {
    let f = small_fixture(1);
    let cfg = TrainConfig {
        max_epochs: 0,
        ..TrainConfig::default()
    };
    let (head, log) = train(&f.header, &f.train, &f.eval, &cfg).unwrap();
    assert!(head.is_zero());
    assert!(log.epochs.is_empty());
    assert_eq!(log.best_epoch, 0);
}

#[test]
fn training_is_deterministic_and_seed_dependent() {
    let f = small_fixture(2);
    let cfg = TrainConfig {
        batch_size: 8,
        max_epochs: 5,
        ..TrainConfig::default()
    };
    let a = train_with_holdout(&f.header, &f.train, DEFAULT_VAL_FRACTION, &cfg).unwrap();
    let b = train_with_holdout(&f.header, &f.train, DEFAULT_VAL_FRACTION, &cfg).unwrap();
    assert!(!a.0.is_zero());
    assert!(a.0.to_bytes() == b.0.to_bytes());
    assert_eq!(a.1, b.1);
    let c = train_with_holdout(&f.header, &f.train, DEFAULT_VAL_FRACTION, &TrainConfig { seed: 9, ..cfg }).unwrap();
    assert!(a.0.to_bytes() != c.0.to_bytes());
}

#[test]
fn returned_head_has_the_lowest_logged_validation_loss() {
    let f = small_fixture(3);
    let cfg = TrainConfig {
        batch_size: 16,
        max_epochs: 20,
        patience: 3,
        ..TrainConfig::default()
    };
    let (head, log) = train(&f.header, &f.train, &f.eval, &cfg).unwrap();
    let val = mean_margin_loss(&f.eval, &head).unwrap().unwrap();
    let best_logged = log
        .epochs
        .iter()
        .map(|e| e.val_loss)
        .fold(log.initial_val_loss, f64::min);
    assert_eq!(val, best_logged);
    assert!(val < log.initial_val_loss, "no improvement: {val} vs {}", log.initial_val_loss);
    // early stopping: at most `patience` epochs after the best one
    assert!(log.epochs.len() <= log.best_epoch + cfg.patience);
    let header = log.to_csv();
    assert!(header.starts_with("epoch,train_loss,val_loss,best\n"));
}

#[test]
fn groups_without_negatives_are_skipped() {
    let mut f = small_fixture(4);
    f.train[0].negatives.clear();
    let cfg = TrainConfig {
        max_epochs: 1,
        ..TrainConfig::default()
    };
    let (_, log) = train(&f.header, &f.train, &f.eval, &cfg).unwrap();
    assert_eq!(log.skipped_groups, 1);
    for g in &mut f.train {
        g.negatives.clear();
    }
    assert!(train(&f.header, &f.train, &f.eval, &cfg).is_err());
}
