#![no_main]

use libfuzzer_sys::fuzz_target;
use pac_mcts::harness::ExperimentConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(config) = ExperimentConfig::from_json(text) {
        let back = ExperimentConfig::from_json(&config.to_json()).expect("valid config re-parses");
        assert_eq!(back.cell_count(), config.cell_count());
        let _ = config.cells();
    }
});
