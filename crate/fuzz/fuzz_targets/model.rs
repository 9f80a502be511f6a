#![no_main]

use libfuzzer_sys::fuzz_target;
use lqss_core::io::{self, ModelFile, SynthSettings};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(file) = ModelFile::from_json(text) else { return };
    if file.to_model(1e-9).is_err() {
        return;
    }
    // keep the dense linear algebra cheap
    if file.n <= 6 && file.m <= 6 {
        let _ = io::synthesize(&file, &SynthSettings::default());
    }
});
