#![no_main]

use libfuzzer_sys::fuzz_target;
use noisy_qpe::harness::parse_config;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        // no workload files are touched: relative paths resolve against a missing base
        if let Ok(c) = parse_config(text, Some(std::path::Path::new("/nonexistent"))) {
            assert!(c.trials >= 1);
            assert!(c.check().is_ok());
        }
    }
});
