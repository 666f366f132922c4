#![no_main]

use libfuzzer_sys::fuzz_target;
use litcal_core::baselines::Temperature;

fuzz_target!(|data: &[u8]| {
    if let Ok(t) = Temperature::from_bytes(data) {
        assert!(t.value() > 0.0 && t.value().is_finite());
        assert_eq!(Temperature::from_bytes(&t.to_bytes()).expect("round trip").value(), t.value());
    }
});
