#![no_main]

use hamming_forge::circuit::Circuit;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(c) = Circuit::parse(text) {
        let again = Circuit::parse(&c.to_text()).expect("serialized circuit parses");
        assert_eq!(again.to_text(), c.to_text());
    }
});
