#![no_main]

use libfuzzer_sys::fuzz_target;
use mhdshock::profiles::{parse_expression, parse_expression_in};

fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(e) = parse_expression(src) {
        // rendered form must parse again
        let text = e.render(&["x"]);
        parse_expression(&text).expect("rendered expression reparses");
        let _ = e.derivative(0).eval(0.5);
        let _ = e.eval(0.25);
    }
    if let Ok(e) = parse_expression_in(src, &["x", "y"]) {
        let _ = e.eval_at(&[0.5, 0.5]);
        let _ = e.derivative(1);
    }
});
