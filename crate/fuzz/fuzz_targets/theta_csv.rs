#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if data.len() < 2 {
        return;
    }
    let n_docs = 1 + (data[0] % 8) as usize;
    let n_topics = 1 + (data[1] % 8) as usize;
    let _ = mpgibbs::io::parse_theta_csv(&data[2..], n_docs, n_topics);
});
