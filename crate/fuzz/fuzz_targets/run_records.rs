#![no_main]

use libfuzzer_sys::fuzz_target;
use pac_mcts::engine::PruningRateDef;
use pac_mcts::harness::{aggregate_records, parse_record_lines, write_record_lines};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(records) = parse_record_lines(text) {
        let mut buf = Vec::new();
        write_record_lines(&mut buf, &records).unwrap();
        let again = parse_record_lines(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(again.len(), records.len());
        let _ = aggregate_records(&records, PruningRateDef::SuboptimalArms);
    }
});
