#![no_main]

use libfuzzer_sys::fuzz_target;
use litcal_core::claimeval::FixtureJudge;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = FixtureJudge::parse(text);
    }
});
