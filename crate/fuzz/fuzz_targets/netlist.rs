#![no_main]

use libfuzzer_sys::fuzz_target;
use twincircuit::circuit::Circuit;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(c) = Circuit::from_netlist(text) {
        assert_eq!(Circuit::from_netlist(&c.to_netlist()).expect("round trip"), c);
    }
});
