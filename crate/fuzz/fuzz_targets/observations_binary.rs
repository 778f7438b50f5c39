#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(symbols) = mpgibbs::io::parse_observations_binary(data) {
        assert_eq!(symbols.len() * 4, data.len());
    }
});
