#![no_main]

use libfuzzer_sys::fuzz_target;
use mrle_harness::design::parse_design_csv;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(z) = parse_design_csv(text) {
        assert!(z.is_finite());
        assert_eq!(z.dims().len(), 2);
    }
});
