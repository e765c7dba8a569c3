#![no_main]

use libfuzzer_sys::fuzz_target;
use twincircuit::garble::GarbledTables;

fuzz_target!(|data: &[u8]| {
    if let Ok(t) = GarbledTables::from_bytes(data) {
        assert_eq!(t.to_bytes(), data);
    }
});
