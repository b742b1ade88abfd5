//! Fuzzes phone canonicalization in both `oh_as_zero` modes, and checks that
//! any accepted number is a fixed point of a second canonicalization pass.

#![no_main]

use adgraph::extract::canonicalize_phone;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(surface) = std::str::from_utf8(data) {
        for oh_as_zero in [false, true] {
            if let Ok(canonical) = canonicalize_phone(surface, oh_as_zero) {
                let again = canonicalize_phone(&canonical, oh_as_zero);
                assert_eq!(again.as_deref(), Ok(canonical.as_str()));
            }
        }
    }
});
