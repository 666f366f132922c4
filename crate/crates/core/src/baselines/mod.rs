//! Baseline confidence estimators: temperature scaling, a linear P(IK) probe
//! and self-consistency clustering.

mod consistency;
mod pik;
mod temperature;

pub use consistency::{consistency_confidence, EquivalenceMatrix};
pub use pik::{pik_confidence, pik_train, PikConfig, PikProbe};
pub use temperature::{
    fit_temperature, temperature_bce, temperature_confidence, temperature_logprobs, Temperature,
    TemperatureFitConfig, MAX_TEMPERATURE, MIN_TEMPERATURE,
};
