#![no_main]

use libfuzzer_sys::fuzz_target;
use lqss_core::io::NetlistFile;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(net) = NetlistFile::from_json(text) else { return };
    if net.n <= 8 && net.m <= 8 {
        let _ = net.check(1e-8);
        let _ = net.realized_network();
    }
});
