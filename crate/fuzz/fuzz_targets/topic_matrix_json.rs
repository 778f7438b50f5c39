#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok((topics, eta)) = mpgibbs::io::parse_topic_matrix_json(data) {
        let json = mpgibbs::io::topic_matrix_to_json(&topics, eta);
        let (back, back_eta) = mpgibbs::io::parse_topic_matrix_json(json.as_bytes()).unwrap();
        assert_eq!(back, topics);
        assert!(back_eta == eta || (back_eta.is_nan() && eta.is_nan()));
    }
});
