#![no_main]

use hamming_forge::shift::ShiftConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = ShiftConfig::from_json(text) {
        let again = ShiftConfig::from_json(&cfg.to_json()).expect("serialized config parses");
        assert_eq!(again.to_json(), cfg.to_json());
    }
});
