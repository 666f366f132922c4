#![no_main]

use libfuzzer_sys::fuzz_target;
use litcal_core::baselines::PikProbe;

fuzz_target!(|data: &[u8]| {
    if let Ok(probe) = PikProbe::from_bytes(data) {
        let bytes = probe.to_bytes();
        assert_eq!(PikProbe::from_bytes(&bytes).expect("round trip").to_bytes(), bytes);
    }
});
