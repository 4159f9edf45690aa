#![no_main]

use libfuzzer_sys::fuzz_target;
use torus_pam::io::{parse_points, parse_value_list};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(v) = parse_value_list(text) {
        assert!(v.iter().all(|x| x.is_finite()));
    }
    for d in 1..=3 {
        if let Ok(p) = parse_points(text, d) {
            assert!(p.iter().all(|x| x.len() == d));
        }
    }
});
