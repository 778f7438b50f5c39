#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    // Corpora that parse must satisfy every structural invariant, and the
    // encode/parse pair must be the identity on them.
    if let Ok(corpus) = mpgibbs::io::parse_corpus_jsonl(data) {
        assert!(corpus.n_tokens() >= 1);
        assert!(corpus.n_docs() >= 1);
        for d in 0..corpus.n_docs() {
            assert!(!corpus.doc_range(d).is_empty());
        }
        let encoded = mpgibbs::io::corpus_to_jsonl(&corpus);
        let back = mpgibbs::io::parse_corpus_jsonl(&encoded).unwrap();
        assert_eq!(back.tokens(), corpus.tokens());
        assert_eq!(back.doc_of(), corpus.doc_of());
        assert_eq!(back.years(), corpus.years());
    }
});
