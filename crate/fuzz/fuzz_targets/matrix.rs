#![no_main]

use libfuzzer_sys::fuzz_target;
use lqss_core::io::{self, MatrixFile};
use lqss_core::static_decomp::ScheduleKind;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(file) = io::parse_json::<MatrixFile>(text) else { return };
    if file.matrix.nrows() > 12 {
        return;
    }
    for kind in [ScheduleKind::Unitary, ScheduleKind::Bogoliubov] {
        if let Ok(m) = file.validated(kind, 1e-9) {
            let _ = io::decompose(m, kind, 1e-9);
        }
    }
});
