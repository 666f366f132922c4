#![no_main]

use libfuzzer_sys::fuzz_target;
use litcal_core::metrics::{parse_predictions, predictions_to_csv, CalibrationReport};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(preds) = parse_predictions(text) {
        assert_eq!(parse_predictions(&predictions_to_csv(&preds).expect("serializes")).expect("round trip").len(), preds.len());
        let _ = CalibrationReport::from_predictions(&preds);
    }
});
