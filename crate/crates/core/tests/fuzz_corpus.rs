//! Replays the checked-in fuzz seeds through the same assertions as the fuzz targets.

use std::fs;
use std::path::PathBuf;

use torus_pam::io::{parse_points, parse_value_list, FieldFile};

fn seeds(target: &str) -> Vec<Vec<u8>> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<Vec<u8>> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| fs::read(e.unwrap().path()).unwrap())
        .collect();
    assert!(!out.is_empty());
    out.sort();
    out
}

#[test]
fn decode_field_seeds() {
    let mut accepted = 0;
    for s in seeds("decode_field") {
        if let Ok(f) = FieldFile::decode(&s) {
            assert_eq!(f.encode(), s);
            accepted += 1;
        }
    }
    assert!(accepted >= 2);
}

#[test]
fn field_csv_seeds() {
    for s in seeds("parse_field_csv") {
        let f = FieldFile::parse_csv(std::str::from_utf8(&s).unwrap()).unwrap();
        assert_eq!(FieldFile::parse_csv(&f.to_csv().unwrap()).unwrap(), f);
    }
}

#[test]
fn value_list_seeds() {
    for s in seeds("parse_value_list") {
        let text = std::str::from_utf8(&s).unwrap();
        let ok = parse_value_list(text).is_ok() || parse_points(text, 2).is_ok();
        assert!(ok, "{text}");
    }
}
