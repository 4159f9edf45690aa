#![no_main]

use libfuzzer_sys::fuzz_target;
use torus_pam::io::FieldFile;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(f) = FieldFile::parse_csv(text) {
        let again = FieldFile::parse_csv(&f.to_csv().expect("encode")).expect("reparse");
        assert_eq!(again.values.len(), f.values.len());
        assert_eq!((again.d, again.n), (f.d, f.n));
    }
});
