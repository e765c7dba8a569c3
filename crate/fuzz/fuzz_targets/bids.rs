#![no_main]

use libfuzzer_sys::fuzz_target;
use twincircuit::auction::parse_bids;

fuzz_target!(|data: &[u8]| {
    let Some((&m, rest)) = data.split_first() else { return };
    let Ok(text) = std::str::from_utf8(rest) else { return };
    let _ = parse_bids(text, m as usize % 8);
});
