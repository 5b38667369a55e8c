#![no_main]

use hflow::{Space, SpacePoint};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(p) = serde_json::from_slice::<SpacePoint>(data) else {
        return;
    };
    let spaces = [
        Space::euclidean(2),
        Space::spider(3),
        Space::Hyperbolic2,
        Space::sphere(1.0),
        Space::product(vec![Space::spider(3), Space::Hyperbolic2]),
    ];
    for s in &spaces {
        // a validated point must validate again unchanged
        if let Ok(q) = s.validate_point(&p) {
            assert_eq!(s.validate_point(&q).ok(), Some(q));
        }
    }
});
