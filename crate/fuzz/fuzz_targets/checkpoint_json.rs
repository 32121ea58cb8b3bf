//! The network checkpoint loader must reject arbitrary JSON without
//! panicking, and anything it accepts must re-serialize and reload.

#![no_main]

use libfuzzer_sys::fuzz_target;

use gancl::nn::{checkpoint_string, load_checkpoint_str};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(net) = load_checkpoint_str(text) {
        let rewritten = checkpoint_string(&net);
        let reloaded = load_checkpoint_str(&rewritten).expect("checkpoint must round-trip");
        assert_eq!(net.param_len(), reloaded.param_len());
    }
});
