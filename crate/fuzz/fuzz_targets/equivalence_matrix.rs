#![no_main]

use libfuzzer_sys::fuzz_target;
use litcal_core::baselines::{consistency_confidence, EquivalenceMatrix};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(m) = EquivalenceMatrix::parse(text) {
        let (rep, frac) = consistency_confidence(&m);
        assert!(rep < m.len());
        assert!(frac > 0.0 && frac <= 1.0);
    }
});
