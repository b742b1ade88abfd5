//! Fuzzes the geocode cache line parser used when warming the resolver from
//! disk. Malformed lines must be rejected with a message, never a panic.

#![no_main]

use adgraph::labeler::parse_cache_line;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(line) = std::str::from_utf8(data) {
        let _ = parse_cache_line(line);
    }
});
