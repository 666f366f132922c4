#![no_main]

use libfuzzer_sys::fuzz_target;
use litcal_core::toylm::ToyConfig;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = ToyConfig::from_toml(text);
    }
});
