#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(params) = mpgibbs::io::parse_hmm_params_json(data) {
        // Accepted parameters are valid distributions; re-encoding must
        // round-trip exactly.
        let json = mpgibbs::io::hmm_params_to_json(&params);
        let back = mpgibbs::io::parse_hmm_params_json(json.as_bytes()).unwrap();
        assert_eq!(back, params);
    }
});
