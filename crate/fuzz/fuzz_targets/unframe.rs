#![no_main]

use libfuzzer_sys::fuzz_target;
use twincircuit::session::{frame, unframe};

fuzz_target!(|data: &[u8]| {
    if let Ok(m) = unframe(data) {
        // a decoded message re-encodes to a frame that decodes to the same message
        let again = frame(&m).expect("decoded message frames");
        assert_eq!(unframe(&again).expect("round trip"), m);
    }
});
