//! Fuzzes the single-line ingest parser with arbitrary bytes. The parser must
//! reject malformed input with a diagnostic and never panic.

#![no_main]

use adgraph::corpus::{parse_raw_line, SchemaMap};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(line) = std::str::from_utf8(data) {
        let schema = SchemaMap::default();
        let _ = parse_raw_line(line, &schema);
    }
});
