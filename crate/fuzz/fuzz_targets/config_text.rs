//! The experiment config parser must never panic: every input either yields
//! a patch or a parse error with a line number.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = gancl::exp::parse_config_text(text);
    }
});
