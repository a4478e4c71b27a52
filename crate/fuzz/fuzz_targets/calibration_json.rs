#![no_main]

use hamming_forge::calibration::CalibrationFile;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(file) = CalibrationFile::from_json(text) {
        let again = CalibrationFile::from_json(&file.to_json()).expect("serialized file parses");
        assert_eq!(again, file);
    }
});
