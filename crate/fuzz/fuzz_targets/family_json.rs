#![no_main]

use hamming_forge::SetFamily;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(u) = SetFamily::from_json(text) {
        let again = SetFamily::from_json(&u.to_json()).expect("serialized family parses");
        assert_eq!(again, u);
    }
});
