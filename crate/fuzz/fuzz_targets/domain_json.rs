#![no_main]

use hflow::maps::Domain;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(d) = Domain::from_json(data) {
        assert_eq!(d.measure().len(), d.len());
    }
});
