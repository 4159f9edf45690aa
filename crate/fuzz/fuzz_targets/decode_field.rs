#![no_main]

use libfuzzer_sys::fuzz_target;
use torus_pam::io::FieldFile;

fuzz_target!(|data: &[u8]| {
    if let Ok(f) = FieldFile::decode(data) {
        // anything accepted must re-encode to the same bytes
        assert_eq!(f.encode(), data);
    }
});
