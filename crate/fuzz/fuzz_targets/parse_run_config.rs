#![no_main]

use libfuzzer_sys::fuzz_target;
use torus_pam_cli::config::parse_run_config;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = parse_run_config(text) {
        for a in cfg.to_args().expect("validated on parse") {
            assert!(a.starts_with("--"));
        }
    }
});
