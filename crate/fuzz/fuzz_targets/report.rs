#![no_main]

use libfuzzer_sys::fuzz_target;
use mrle_harness::parse_report;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(report) = parse_report(text) {
        // anything accepted must serialize and parse again
        let json = report.to_json().expect("accepted report serializes");
        parse_report(&json).expect("serialized report parses");
        let _ = report.to_csv();
    }
});
