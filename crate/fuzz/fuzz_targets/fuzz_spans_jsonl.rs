//! Fuzzes the span-annotation line parser. Invalid JSON, wrong shapes,
//! unknown categories, and inverted offsets must all surface as `Err`.

#![no_main]

use adgraph::extract::parse_span_line;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(line) = std::str::from_utf8(data) {
        let _ = parse_span_line(line);
    }
});
