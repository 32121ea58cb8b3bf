//! The sample CSV parser must never panic, and anything it accepts must
//! survive a write/parse round trip.

#![no_main]

use libfuzzer_sys::fuzz_target;

use gancl::data::{parse_points_csv, points_to_batch, points_csv};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(points) = parse_points_csv(text) {
        let rewritten = points_csv(points_to_batch(points.clone()).view());
        let reparsed = parse_points_csv(&rewritten).expect("accepted output must reparse");
        assert_eq!(points.len(), reparsed.len());
    }
});
