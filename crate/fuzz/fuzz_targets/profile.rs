#![no_main]

use libfuzzer_sys::fuzz_target;
use mhdshock::profiles::{ExitPressureProfile, WallProfile};

fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(w) = WallProfile::parse(0.0, 1.0, 0.01, src) {
        let _ = w.f(0.5);
        let _ = w.fp(0.5);
    }
    let _ = ExitPressureProfile::parse(src);
});
