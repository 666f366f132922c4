#![no_main]

use libfuzzer_sys::fuzz_target;
use litcal_core::litcab::BiasHead;

fuzz_target!(|data: &[u8]| {
    if let Ok(head) = BiasHead::from_bytes(data) {
        let bytes = head.to_bytes();
        assert_eq!(BiasHead::from_bytes(&bytes).expect("round trip").to_bytes(), bytes);
    }
});
