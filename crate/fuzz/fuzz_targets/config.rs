#![no_main]

use std::path::Path;

use libfuzzer_sys::fuzz_target;
use mrle_harness::ExperimentConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = ExperimentConfig::from_json(text) {
        // design files resolve inside a directory that does not exist
        let _ = cfg.validate(Path::new("/nonexistent-fuzz-base"));
    }
});
