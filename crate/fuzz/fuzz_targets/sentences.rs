#![no_main]
//! Input: paragraph, a NUL byte, then the span to map.

use libfuzzer_sys::fuzz_target;
use litcal_core::claimeval::{longest_common_substring, map_span, split_sentences};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let (paragraph, span) = text.split_once('\0').unwrap_or((text, ""));
    let sentences = split_sentences(paragraph);
    for s in &sentences {
        assert_eq!(&paragraph[s.char_range.start..s.char_range.end], s.text);
    }
    if let Ok(i) = map_span(&sentences, span) {
        assert!(i < sentences.len());
    }
    let (len, range) = longest_common_substring(paragraph, span);
    assert!(len <= span.len() && range.end <= paragraph.len());
});
