#![no_main]

use libfuzzer_sys::fuzz_target;
use twincircuit::auction::parse_config;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = parse_config(text) {
        let _ = cfg.validate();
    }
});
