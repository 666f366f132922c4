//! Logit-bias calibration head.
//!
//! A single linear layer maps each token's last-layer hidden state to a bias
//! over the vocabulary, which is added to the base logits before the softmax.
//! The head is trained with a max-margin loss that ranks a question's correct
//! generation above its incorrect ones by adjusted sequence confidence.

mod head;
mod loss;
mod train;

pub use head::{parameter_count, parameter_ratio, BiasHead, HeadGradient};
pub use loss::{gradient_check, margin_loss, margin_loss_and_gradient, margin_loss_gradient};
pub use train::{
    mean_margin_loss, train, train_with_holdout, EpochRecord, TrainConfig, TrainLog,
    DEFAULT_VAL_FRACTION,
};
