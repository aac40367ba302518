#![no_main]

use libfuzzer_sys::fuzz_target;
use mhdshock::cli::Report;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(r) = Report::parse(text) {
        let again = Report::parse(&r.render()).expect("rendered report reparses");
        assert_eq!(r.render(), again.render());
        let _ = r.config();
    }
});
