#![no_main]
//! Input: vocab, hidden and mode bytes, offset and length (u16 each), then the
//! sidecar bytes.

use libfuzzer_sys::fuzz_target;
use litcal_core::records::sidecar::{Sidecar, TensorRef};
use litcal_core::records::{DatasetHeader, LogitMode};

fuzz_target!(|data: &[u8]| {
    let Some((meta, bytes)) = data.split_first_chunk::<7>() else { return };
    let mut header = DatasetHeader::full(2 + meta[0] as usize % 32, 1 + meta[1] as usize % 8);
    if meta[2] % 2 == 1 {
        header.logit_mode = LogitMode::Topk(1 + (meta[2] as u32 / 2) % (header.vocab_size as u32 - 1));
    }
    let r = TensorRef {
        offset: u16::from_le_bytes([meta[3], meta[4]]) as u64,
        len: u16::from_le_bytes([meta[5], meta[6]]) as u64,
    };
    if let Ok(sidecar) = Sidecar::new(bytes) {
        if let Ok((logits, hidden)) = sidecar.read(r, &header) {
            assert_eq!(hidden.len(), header.hidden_dim);
            let _ = logits.values_f64();
        }
    }
});
