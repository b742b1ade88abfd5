//! Fuzzes the model checkpoint decoder. Arbitrary buffers must decode to
//! `Err` or to a model whose re-encoding is stable; comparing bytes instead of
//! structs keeps the check meaningful even when the fuzzer smuggles NaN
//! weights through the float fields.

#![no_main]

use adgraph::model_lab::{decode_checkpoint, encode_checkpoint};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(model) = decode_checkpoint(data) {
        let bytes = encode_checkpoint(&model);
        let again = decode_checkpoint(&bytes).expect("re-encoded checkpoint must decode");
        assert_eq!(bytes, encode_checkpoint(&again));
    }
});
