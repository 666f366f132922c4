#![no_main]

use libfuzzer_sys::fuzz_target;
use litcal_core::metrics::CalibrationReport;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(report) = CalibrationReport::from_csv(text) {
        let _ = report.to_svg();
    }
});
