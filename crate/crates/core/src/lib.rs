//! Confidence calibration for language-model generations.

pub mod baselines;
pub mod calibrator;
pub mod checkpoint;
pub mod claimeval;
pub mod confidence;
pub mod error;
pub mod litcab;
pub mod math;
pub mod metrics;
pub mod records;
pub mod rng;
pub mod toylm;

pub use error::{Error, ErrorKind, Result};
