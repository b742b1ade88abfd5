//! Fuzzes the config parser, and checks that any accepted document round-trips
//! through `emit` to an equivalent config.

#![no_main]

use adgraph::config::Config;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(config) = Config::parse(text) {
            let emitted = config.emit();
            let reparsed = Config::parse(&emitted).expect("emitted config must reparse");
            assert_eq!(emitted, reparsed.emit());
        }
    }
});
