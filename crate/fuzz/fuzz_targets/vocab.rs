#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(words) = mpgibbs::io::parse_vocab(data) {
        assert!(!words.is_empty());
        assert!(words.iter().all(|w| !w.is_empty()));
    }
});
