//! Fuzzes the lenient posting-date normalizer. Any string must either
//! normalize to an ISO date or come back as `None`.

#![no_main]

use adgraph::corpus::parse_date_lenient;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Some(normalized) = parse_date_lenient(s) {
            // Normalized dates are themselves parseable and stable.
            assert_eq!(parse_date_lenient(&normalized).as_deref(), Some(normalized.as_str()));
        }
    }
});
