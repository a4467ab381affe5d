#![no_main]
//! Fuzz the key = value config parser and its validation.

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = dpg::cli::parse_config_str(text);
    }
});
