#![no_main]

use libfuzzer_sys::fuzz_target;
use pac_mcts::harness::{parse_sweep_csv, write_sweep_csv};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(rows) = parse_sweep_csv(text) {
        let mut buf = Vec::new();
        write_sweep_csv(&mut buf, &rows).unwrap();
        let again = parse_sweep_csv(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(again.len(), rows.len());
    }
});
