#![no_main]

use hflow::scenario::ScenarioConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    // the echo of an accepted config must be accepted too
    if let Ok(c) = ScenarioConfig::parse(data, &[]) {
        ScenarioConfig::parse(&c.echo(), &[]).expect("echo reparses");
    }
});
