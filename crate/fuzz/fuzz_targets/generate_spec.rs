#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = mpgibbs_cli::config::GenerateSpec::from_slice(data);
});
