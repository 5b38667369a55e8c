#![no_main]

use hflow::io::read_map;
use hflow::Space;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    for s in [Space::euclidean(2), Space::spider(3), Space::Hyperbolic2] {
        let _ = read_map(data, &s);
    }
});
