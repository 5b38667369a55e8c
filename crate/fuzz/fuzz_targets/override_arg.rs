#![no_main]

use hflow::scenario::{Override, ScenarioConfig};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    let sets: Vec<Override> = data
        .lines()
        .filter_map(|l| Override::parse(l).ok())
        .collect();
    let _ = ScenarioConfig::from_overrides(&sets);
});
