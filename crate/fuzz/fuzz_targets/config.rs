#![no_main]

use libfuzzer_sys::fuzz_target;
use mhdshock::cli::RunConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = RunConfig::parse(text) {
        let again = RunConfig::parse(&cfg.to_ini()).expect("emitted config reparses");
        assert_eq!(cfg.to_ini(), again.to_ini());
        let _ = cfg.validate();
    }
});
