#![no_main]
//! Input: a little-endian u32 text length, the record text, then the sidecar.

use libfuzzer_sys::fuzz_target;
use litcal_core::records::{encode_dataset, parse_dataset};

fuzz_target!(|data: &[u8]| {
    let Some((len, rest)) = data.split_first_chunk::<4>() else { return };
    let len = (u32::from_le_bytes(*len) as usize).min(rest.len());
    let (text, sidecar) = rest.split_at(len);
    let Ok(text) = std::str::from_utf8(text) else { return };
    if let Ok(ds) = parse_dataset(text, sidecar) {
        // anything accepted must survive a round trip
        let (t, s) = encode_dataset(&ds).expect("parsed dataset re-encodes");
        let again = parse_dataset(&t, &s).expect("re-encoded dataset parses");
        assert_eq!(again.groups.len(), ds.groups.len());
        assert_eq!(again.evals.len(), ds.evals.len());
    }
});
