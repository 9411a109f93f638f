#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    // config parsing and validation must never panic on untrusted text
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = samplemax::parse_config(text);
    }
});
