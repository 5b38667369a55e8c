#![no_main]

use hflow::{MetricSpace, Space};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(s) = Space::from_json(data) {
        if s.validate().is_ok() {
            let p = s.base_point();
            assert_eq!(s.distance(&p, &p), 0.0);
        }
    }
});
