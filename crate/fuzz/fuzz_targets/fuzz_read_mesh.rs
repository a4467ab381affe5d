#![no_main]
//! Fuzz the ASCII mesh parser: arbitrary bytes must produce Ok or a clean
//! error, never a panic, with both reorientation settings.

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Some((&flag, rest)) = data.split_first() else {
        return;
    };
    let text = String::from_utf8_lossy(rest);
    let _ = dpg::mesh::Mesh::parse_ascii(&text, flag & 1 == 1);
});
