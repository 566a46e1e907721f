#![no_main]

use libfuzzer_sys::fuzz_target;
use pac_mcts::oracle::VerifySuite;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = VerifySuite::from_json(text);
    }
});
