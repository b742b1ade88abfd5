//! Fuzzes the binary graph decoder. Truncated, corrupted, or adversarial
//! buffers must produce `Err`, never a panic or out-of-bounds access, and any
//! buffer that decodes must survive an encode/decode round trip.

#![no_main]

use adgraph::graph::{decode, encode};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(graph) = decode(data) {
        let bytes = encode(&graph);
        let again = decode(&bytes).expect("re-encoded graph must decode");
        assert_eq!(graph, again);
    }
});
