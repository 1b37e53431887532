#![no_main]

use libfuzzer_sys::fuzz_target;
use noisy_qpe::faultcost::parse_workload;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(w) = parse_workload(text) {
            assert!(w.eps() > 0.0 && w.eps() < 1.0);
        }
    }
});
