use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::records::{split_train_val, DatasetHeader, QuestionGroup};
use crate::rng::Prng;

use super::head::{BiasHead, HeadGradient};
use super::loss::{margin_loss, margin_loss_and_gradient};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 128,
            learning_rate: 1e-5,
            max_epochs: 50,
            patience: 5,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch_size must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.patience == 0 {
            return Err(Error::InvalidArgument("patience must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    /// This epoch produced the best validation loss so far.
    pub best: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainLog {
    /// Validation loss of the zero-initialized head.
    pub initial_val_loss: f64,
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose head was returned; 0 means the initial head.
    pub best_epoch: usize,
    /// Training groups skipped for lack of negatives.
    pub skipped_groups: usize,
}

impl TrainLog {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,val_loss,best\n");
        for e in &self.epochs {
            writeln!(
                out,
                "{},{:.6},{:.6},{}",
                e.epoch, e.train_loss, e.val_loss, e.best as u8
            )
            .expect("writing to a String");
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Mean margin loss over the trainable groups; `None` if there are none.
pub fn mean_margin_loss(groups: &[QuestionGroup], head: &BiasHead) -> Result<Option<f64>> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for g in groups.iter().filter(|g| g.is_trainable()) {
        sum += margin_loss(g, head)?;
        n += 1;
    }
    Ok((n > 0).then(|| sum / n as f64))
}

/// Trains a zero-initialized head with minibatch gradient descent on the
/// max-margin loss.
///
/// Each batch step uses the mean loss over its groups. Epoch order is a
/// seeded shuffle. Training stops after `patience` epochs without a strict
/// improvement in validation loss, and the head with the lowest validation
/// loss (possibly the initial zero head) is returned. When `val` has no
/// trainable groups the training loss is used as the stopping criterion.
pub fn train(
    header: &DatasetHeader,
    groups: &[QuestionGroup],
    val: &[QuestionGroup],
    config: &TrainConfig,
) -> Result<(BiasHead, TrainLog)> {
    config.validate()?;
    let trainable: Vec<&QuestionGroup> = groups.iter().filter(|g| g.is_trainable()).collect();
    let skipped = groups.len() - trainable.len();
    if skipped > 0 {
        log::warn!("skipping {skipped} training groups without negatives");
    }
    if trainable.is_empty() {
        return Err(Error::Training("no training group has negatives".into()));
    }
    let mut head = BiasHead::for_header(header);
    let mut log = TrainLog {
        skipped_groups: skipped,
        ..TrainLog::default()
    };
    if config.max_epochs == 0 {
        return Ok((head, log));
    }

    let criterion = |head: &BiasHead| -> Result<f64> {
        match mean_margin_loss(val, head)? {
            Some(v) => Ok(v),
            None => Ok(mean_margin_loss(groups, head)?.expect("trainable groups exist")),
        }
    };

    log.initial_val_loss = criterion(&head)?;
    let mut best_loss = log.initial_val_loss;
    let mut best_head = head.clone();
    let mut since_best = 0usize;
    let mut rng = Prng::new(config.seed);
    let mut order: Vec<usize> = (0..trainable.len()).collect();

    for epoch in 1..=config.max_epochs {
        rng.shuffle(&mut order);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            let mut grad = HeadGradient::zeros_like(&head);
            for &i in batch {
                let (loss, g) = margin_loss_and_gradient(trainable[i], &head)?;
                epoch_loss += loss;
                grad.add_scaled(&g, 1.0);
            }
            head.descend(&grad, config.learning_rate / batch.len() as f64);
        }
        let train_loss = epoch_loss / trainable.len() as f64;
        let val_loss = criterion(&head)?;
        if !val_loss.is_finite() {
            return Err(Error::Training(format!("validation loss diverged at epoch {epoch}")));
        }
        let improved = val_loss < best_loss;
        if improved {
            best_loss = val_loss;
            best_head = head.clone();
            log.best_epoch = epoch;
            since_best = 0;
        } else {
            since_best += 1;
        }
        log::debug!("epoch {epoch}: train {train_loss:.6} val {val_loss:.6}");
        log.epochs.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
            best: improved,
        });
        if since_best >= config.patience {
            log::info!("early stop after epoch {epoch}; best epoch {}", log.best_epoch);
            break;
        }
    }
    Ok((best_head, log))
}

/// Fraction of the training groups held out for early stopping by
/// [`train_with_holdout`].
pub const DEFAULT_VAL_FRACTION: f64 = 0.2;

/// Holds out a seeded `val_fraction` of `groups` for early stopping and
/// trains on the rest. The split uses `config.seed`.
pub fn train_with_holdout(
    header: &DatasetHeader,
    groups: &[QuestionGroup],
    val_fraction: f64,
    config: &TrainConfig,
) -> Result<(BiasHead, TrainLog)> {
    let (train_groups, val) = split_train_val(groups, val_fraction, config.seed)?;
    train(header, &train_groups, &val, config)
}
