//! On-disk formats: observation sequences (text and binary), HMM parameter
//! and topic-matrix JSON, JSONL corpora with companion vocabularies, and
//! the CSV table helpers shared by the experiment harness.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hmm::HmmParams;
use crate::lda::{Corpus, TopicMatrix};
use crate::prob::SimplexVector;
use crate::run::TracePoint;

/// Format a float with 9 significant digits; the fixed precision of every
/// CSV cell this crate writes.
pub fn fmt_sig9(v: f64) -> String {
    format!("{v:.8e}")
}

// ---------------------------------------------------------------------
// Observation sequences
// ---------------------------------------------------------------------

/// One integer symbol per line.
pub fn parse_observations_text(bytes: &[u8]) -> Result<Vec<u32>> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Parse {
        line: 0,
        message: format!("not UTF-8: {e}"),
    })?;
    let mut symbols = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let sym: u32 = trimmed.parse().map_err(|e| Error::Parse {
            line: idx + 1,
            message: format!("bad symbol {trimmed:?}: {e}"),
        })?;
        symbols.push(sym);
    }
    if symbols.is_empty() {
        return Err(Error::format("observation file contains no symbols"));
    }
    Ok(symbols)
}

pub fn load_observations_text(path: &Path) -> Result<Vec<u32>> {
    parse_observations_text(&fs::read(path)?)
}

pub fn save_observations_text(symbols: &[u32], path: &Path) -> Result<()> {
    let mut out = String::with_capacity(symbols.len() * 3);
    for s in symbols {
        out.push_str(&s.to_string());
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Raw little-endian u32 stream.
pub fn parse_observations_binary(bytes: &[u8]) -> Result<Vec<u32>> {
    if bytes.len() % 4 != 0 {
        return Err(Error::format(format!(
            "binary observation file length {} is not a multiple of 4",
            bytes.len()
        )));
    }
    if bytes.is_empty() {
        return Err(Error::format("observation file contains no symbols"));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

pub fn load_observations_binary(path: &Path) -> Result<Vec<u32>> {
    parse_observations_binary(&fs::read(path)?)
}

pub fn save_observations_binary(symbols: &[u32], path: &Path) -> Result<()> {
    let mut out = Vec::with_capacity(symbols.len() * 4);
    for s in symbols {
        out.extend_from_slice(&s.to_le_bytes());
    }
    fs::write(path, out)?;
    Ok(())
}

// ---------------------------------------------------------------------
// HMM parameters
// ---------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct HmmParamsFile {
    #[serde(rename = "S")]
    s: usize,
    #[serde(rename = "W")]
    w: usize,
    initial: Vec<f64>,
    transitions: Vec<Vec<f64>>,
    emissions: Vec<Vec<f64>>,
}

pub fn hmm_params_to_json(params: &HmmParams) -> String {
    let file = HmmParamsFile {
        s: params.n_states(),
        w: params.n_symbols(),
        initial: params.initial().weights().to_vec(),
        transitions: (0..params.n_states())
            .map(|a| params.transition(a).weights().to_vec())
            .collect(),
        emissions: (0..params.n_states())
            .map(|a| params.emission(a).weights().to_vec())
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("params serialize")
}

pub fn parse_hmm_params_json(bytes: &[u8]) -> Result<HmmParams> {
    let file: HmmParamsFile = serde_json::from_slice(bytes).map_err(|e| Error::Parse {
        line: e.line(),
        message: e.to_string(),
    })?;
    if file.initial.len() != file.s
        || file.transitions.len() != file.s
        || file.emissions.len() != file.s
        || file.transitions.iter().any(|r| r.len() != file.s)
        || file.emissions.iter().any(|r| r.len() != file.w)
    {
        return Err(Error::format(
            "parameter rows do not match the declared S and W",
        ));
    }
    HmmParams::new(
        SimplexVector::new(file.initial)?,
        file.transitions
            .into_iter()
            .map(SimplexVector::new)
            .collect::<Result<_>>()?,
        file.emissions
            .into_iter()
            .map(SimplexVector::new)
            .collect::<Result<_>>()?,
    )
}

pub fn load_hmm_params(path: &Path) -> Result<HmmParams> {
    parse_hmm_params_json(&fs::read(path)?)
}

pub fn save_hmm_params(params: &HmmParams, path: &Path) -> Result<()> {
    fs::write(path, hmm_params_to_json(params))?;
    Ok(())
}

// ---------------------------------------------------------------------
// Topic matrices
// ---------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct TopicMatrixFile {
    #[serde(rename = "T")]
    t: usize,
    #[serde(rename = "W")]
    w: usize,
    eta: f64,
    topics: Vec<Vec<f64>>,
}

pub fn topic_matrix_to_json(topics: &TopicMatrix, eta: f64) -> String {
    let file = TopicMatrixFile {
        t: topics.n_topics(),
        w: topics.vocab_size(),
        eta,
        topics: topics
            .topics()
            .iter()
            .map(|row| row.weights().to_vec())
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("topics serialize")
}

pub fn parse_topic_matrix_json(bytes: &[u8]) -> Result<(TopicMatrix, f64)> {
    let file: TopicMatrixFile = serde_json::from_slice(bytes).map_err(|e| Error::Parse {
        line: e.line(),
        message: e.to_string(),
    })?;
    if file.topics.len() != file.t || file.topics.iter().any(|r| r.len() != file.w) {
        return Err(Error::format("topic rows do not match the declared T and W"));
    }
    let topics = TopicMatrix::new(
        file.topics
            .into_iter()
            .map(SimplexVector::new)
            .collect::<Result<_>>()?,
    )?;
    Ok((topics, file.eta))
}

pub fn load_topic_matrix(path: &Path) -> Result<(TopicMatrix, f64)> {
    parse_topic_matrix_json(&fs::read(path)?)
}

pub fn save_topic_matrix(topics: &TopicMatrix, eta: f64, path: &Path) -> Result<()> {
    fs::write(path, topic_matrix_to_json(topics, eta))?;
    Ok(())
}

// ---------------------------------------------------------------------
// Corpora: one JSON document per line plus a companion vocabulary file
// ---------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct CorpusLine {
    id: usize,
    #[serde(default)]
    year: Option<i32>,
    tokens: Vec<u32>,
}

/// Parse a JSONL corpus. The vocabulary size is inferred as the largest
/// token id plus one; load alongside a vocabulary file to validate against
/// a declared size instead.
pub fn parse_corpus_jsonl(bytes: &[u8]) -> Result<Corpus> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Parse {
        line: 0,
        message: format!("not UTF-8: {e}"),
    })?;
    let mut tokens = Vec::new();
    let mut doc_of = Vec::new();
    let mut years: Vec<Option<i32>> = Vec::new();
    let mut n_docs = 0usize;
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let doc: CorpusLine = serde_json::from_str(line).map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        if doc.id != n_docs {
            return Err(Error::format(format!(
                "line {line_no}: document id {} out of order, expected {n_docs}",
                doc.id
            )));
        }
        if doc.tokens.is_empty() {
            return Err(Error::format(format!(
                "line {line_no}: document {} has no tokens",
                doc.id
            )));
        }
        tokens.extend_from_slice(&doc.tokens);
        doc_of.extend(std::iter::repeat(n_docs as u32).take(doc.tokens.len()));
        years.push(doc.year);
        n_docs += 1;
    }
    if n_docs == 0 {
        return Err(Error::format("corpus contains no documents"));
    }
    let doc_years = if years.iter().all(|y| y.is_none()) {
        None
    } else if years.iter().all(|y| y.is_some()) {
        Some(years.into_iter().map(|y| y.unwrap()).collect())
    } else {
        return Err(Error::format(
            "year stamps must be present on every document or on none",
        ));
    };
    let vocab_size = tokens.iter().copied().max().unwrap() as usize + 1;
    Corpus::new(tokens, doc_of, doc_years, vocab_size)
}

pub fn load_corpus(path: &Path) -> Result<Corpus> {
    parse_corpus_jsonl(&fs::read(path)?)
}

pub fn corpus_to_jsonl(corpus: &Corpus) -> Vec<u8> {
    let mut out = Vec::new();
    for d in 0..corpus.n_docs() {
        let line = CorpusLine {
            id: d,
            year: corpus.years().map(|ys| ys[d]),
            tokens: corpus.tokens()[corpus.doc_range(d)].to_vec(),
        };
        serde_json::to_writer(&mut out, &line).expect("corpus serialize");
        out.push(b'\n');
    }
    out
}

pub fn save_corpus(corpus: &Corpus, path: &Path) -> Result<()> {
    fs::write(path, corpus_to_jsonl(corpus))?;
    Ok(())
}

/// One token string per line; the line number is the word id.
pub fn parse_vocab(bytes: &[u8]) -> Result<Vec<String>> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Parse {
        line: 0,
        message: format!("not UTF-8: {e}"),
    })?;
    let mut words = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.is_empty() {
            return Err(Error::Parse {
                line: idx + 1,
                message: "empty vocabulary entry".into(),
            });
        }
        words.push(line.to_string());
    }
    if words.is_empty() {
        return Err(Error::format("vocabulary file is empty"));
    }
    Ok(words)
}

pub fn load_vocab(path: &Path) -> Result<Vec<String>> {
    parse_vocab(&fs::read(path)?)
}

pub fn save_vocab(words: &[String], path: &Path) -> Result<()> {
    let mut out = String::new();
    for w in words {
        out.push_str(w);
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Load a corpus against its vocabulary: the vocabulary length is the
/// declared vocabulary size and every token must fall below it.
pub fn load_corpus_with_vocab(corpus_path: &Path, vocab_path: &Path) -> Result<(Corpus, Vec<String>)> {
    let vocab = load_vocab(vocab_path)?;
    let raw = load_corpus(corpus_path)?;
    if let Some((i, &tok)) = raw
        .tokens()
        .iter()
        .enumerate()
        .find(|(_, &tok)| tok as usize >= vocab.len())
    {
        return Err(Error::format(format!(
            "token {tok} at stream index {i} (document {}) is outside the declared vocabulary of size {}",
            raw.doc_of()[i],
            vocab.len()
        )));
    }
    let corpus = Corpus::new(
        raw.tokens().to_vec(),
        raw.doc_of().to_vec(),
        raw.years().map(|y| y.to_vec()),
        vocab.len(),
    )?;
    Ok((corpus, vocab))
}

// ---------------------------------------------------------------------
// CSV tables
// ---------------------------------------------------------------------

/// `iteration,<value_name>` rows, one per trace point.
pub fn write_trace_csv(points: &[TracePoint], value_name: &str, path: &Path) -> Result<()> {
    let mut out = String::from("iteration,");
    out.push_str(value_name);
    out.push('\n');
    for p in points {
        out.push_str(&format!("{},{}\n", p.iteration, fmt_sig9(p.value)));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Sparse per-document topic distributions as `doc,topic,weight` rows.
pub fn write_theta_csv(thetas: &[SimplexVector], path: &Path) -> Result<()> {
    let file = fs::File::create(path)?;
    let mut out = std::io::BufWriter::new(file);
    writeln!(out, "doc,topic,weight")?;
    for (d, theta) in thetas.iter().enumerate() {
        for (t, &w) in theta.weights().iter().enumerate() {
            if w > 0.0 {
                writeln!(out, "{d},{t},{}", fmt_sig9(w))?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

/// Inverse of [`write_theta_csv`]. Rows are renormalized per document to
/// absorb the 9-digit rounding of the on-disk form.
pub fn parse_theta_csv(bytes: &[u8], n_docs: usize, n_topics: usize) -> Result<Vec<SimplexVector>> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Parse {
        line: 0,
        message: format!("not UTF-8: {e}"),
    })?;
    let mut rows = vec![vec![0.0; n_topics]; n_docs];
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == "doc,topic,weight" => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                message: "expected header doc,topic,weight".into(),
            })
        }
    }
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let parse_err = |what: &str| Error::Parse {
            line: line_no,
            message: format!("bad {what} field"),
        };
        let d: usize = fields
            .next()
            .and_then(|f| f.trim().parse().ok())
            .ok_or_else(|| parse_err("doc"))?;
        let t: usize = fields
            .next()
            .and_then(|f| f.trim().parse().ok())
            .ok_or_else(|| parse_err("topic"))?;
        let w: f64 = fields
            .next()
            .and_then(|f| f.trim().parse().ok())
            .ok_or_else(|| parse_err("weight"))?;
        if d >= n_docs || t >= n_topics {
            return Err(Error::Parse {
                line: line_no,
                message: format!("indices ({d}, {t}) outside ({n_docs}, {n_topics})"),
            });
        }
        rows[d][t] = w;
    }
    rows.into_iter()
        .enumerate()
        .map(|(d, row)| {
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-6 {
                return Err(Error::format(format!(
                    "document {d} weights sum to {sum}, expected 1"
                )));
            }
            SimplexVector::from_unnormalized(row)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lda::LdaPathSet;
    use crate::synth::{make_lda_dataset, SynthLdaSpec, YearSpan};
    use proptest::prelude::*;

    fn tmp() -> tempfile::TempDir {
        tempfile::tempdir().unwrap()
    }

    #[test]
    fn observations_text_round_trip_and_errors() {
        let dir = tmp();
        let path = dir.path().join("obs.txt");
        save_observations_text(&[3, 0, 7, 7], &path).unwrap();
        assert_eq!(load_observations_text(&path).unwrap(), vec![3, 0, 7, 7]);
        let err = parse_observations_text(b"1\nx\n2\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn observations_binary_round_trip_and_length_check() {
        let dir = tmp();
        let path = dir.path().join("obs.bin");
        save_observations_binary(&[1, 2, 300_000], &path).unwrap();
        assert_eq!(load_observations_binary(&path).unwrap(), vec![1, 2, 300_000]);
        assert!(parse_observations_binary(&[1, 2, 3]).is_err());
    }

    #[test]
    fn hmm_params_round_trip() {
        let params = HmmParams::new(
            SimplexVector::new(vec![0.25, 0.75]).unwrap(),
            vec![
                SimplexVector::new(vec![0.5, 0.5]).unwrap(),
                SimplexVector::new(vec![0.1, 0.9]).unwrap(),
            ],
            vec![
                SimplexVector::new(vec![0.2, 0.3, 0.5]).unwrap(),
                SimplexVector::new(vec![0.6, 0.2, 0.2]).unwrap(),
            ],
        )
        .unwrap();
        let dir = tmp();
        let path = dir.path().join("params.json");
        save_hmm_params(&params, &path).unwrap();
        let back = load_hmm_params(&path).unwrap();
        assert_eq!(params, back);
        // Declared dimensions are enforced.
        assert!(parse_hmm_params_json(
            br#"{"S":2,"W":2,"initial":[1.0],"transitions":[[1.0,0.0],[0.5,0.5]],"emissions":[[0.5,0.5],[0.5,0.5]]}"#
        )
        .is_err());
    }

    #[test]
    fn topic_matrix_round_trip() {
        let data = make_lda_dataset(&SynthLdaSpec {
            docs: 3,
            seed: 1,
            topics: 4,
            vocab: 12,
            doc_len: 5,
            alpha: 1.0,
            band_weight: 0.9,
            years: None,
        })
        .unwrap();
        let dir = tmp();
        let path = dir.path().join("topics.json");
        save_topic_matrix(&data.topics, 0.01, &path).unwrap();
        let (back, eta) = load_topic_matrix(&path).unwrap();
        assert_eq!(back, data.topics);
        assert_eq!(eta, 0.01);
    }

    #[test]
    fn corpus_round_trip_with_vocab_preserves_everything() {
        let data = make_lda_dataset(&SynthLdaSpec {
            docs: 5,
            seed: 2,
            topics: 3,
            vocab: 9,
            doc_len: 4,
            alpha: 1.0,
            band_weight: 0.9,
            years: Some(YearSpan {
                start: 1850,
                docs_per_year: 2,
            }),
        })
        .unwrap();
        let dir = tmp();
        let corpus_path = dir.path().join("corpus.jsonl");
        let vocab_path = dir.path().join("vocab.txt");
        let vocab: Vec<String> = (0..9).map(|i| format!("w{i}")).collect();
        save_corpus(&data.corpus, &corpus_path).unwrap();
        save_vocab(&vocab, &vocab_path).unwrap();
        let (back, vocab_back) = load_corpus_with_vocab(&corpus_path, &vocab_path).unwrap();
        assert_eq!(back, data.corpus);
        assert_eq!(vocab_back, vocab);
    }

    #[test]
    fn corpus_parse_errors_carry_line_numbers_and_ids() {
        // Malformed JSON on line 2.
        let err = parse_corpus_jsonl(b"{\"id\":0,\"tokens\":[1]}\n{oops\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        // Empty token list names the document.
        let err = parse_corpus_jsonl(b"{\"id\":0,\"tokens\":[1]}\n{\"id\":1,\"tokens\":[]}\n")
            .unwrap_err();
        assert!(err.to_string().contains("document 1"), "{err}");
        // Out-of-order ids.
        let err = parse_corpus_jsonl(b"{\"id\":0,\"tokens\":[1]}\n{\"id\":3,\"tokens\":[1]}\n")
            .unwrap_err();
        assert!(err.to_string().contains("expected 1"), "{err}");
        // Mixed year stamps.
        let err = parse_corpus_jsonl(
            b"{\"id\":0,\"year\":1900,\"tokens\":[1]}\n{\"id\":1,\"tokens\":[1]}\n",
        )
        .unwrap_err();
        assert!(err.to_string().contains("year"), "{err}");
    }

    #[test]
    fn out_of_vocabulary_token_names_the_offender() {
        let dir = tmp();
        let corpus_path = dir.path().join("corpus.jsonl");
        let vocab_path = dir.path().join("vocab.txt");
        std::fs::write(&corpus_path, "{\"id\":0,\"tokens\":[0,1,3]}\n").unwrap();
        save_vocab(&["a".into(), "b".into(), "c".into()], &vocab_path).unwrap();
        let err = load_corpus_with_vocab(&corpus_path, &vocab_path).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("token 3") && msg.contains("index 2"), "{msg}");
    }

    #[test]
    fn theta_csv_round_trips_through_nine_digit_rounding() {
        let corpus = Corpus::from_docs(&[vec![0, 0, 0], vec![0, 0, 0, 0, 0, 0, 0]], None, 1).unwrap();
        let pathset = LdaPathSet::new(vec![vec![0, 1, 2, 0, 0, 1, 2, 2, 2, 1]], 3).unwrap();
        let thetas: Vec<SimplexVector> = (0..2)
            .map(|d| crate::lda::theta_doc(&pathset, &corpus, d, 0).unwrap())
            .collect();
        let dir = tmp();
        let path = dir.path().join("thetas.csv");
        write_theta_csv(&thetas, &path).unwrap();
        let back = parse_theta_csv(&std::fs::read(&path).unwrap(), 2, 3).unwrap();
        for (a, b) in thetas.iter().zip(&back) {
            for t in 0..3 {
                assert!((a[t] - b[t]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn trace_csv_format() {
        let dir = tmp();
        let path = dir.path().join("trace.csv");
        write_trace_csv(
            &[
                TracePoint { iteration: 0, value: -1234.5678901234 },
                TracePoint { iteration: 100, value: -1200.0 },
            ],
            "log_likelihood",
            &path,
        )
        .unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("iteration,log_likelihood"));
        assert_eq!(lines.next(), Some("0,-1.23456789e3"));
        assert_eq!(lines.next(), Some("100,-1.20000000e3"));
        assert_eq!(lines.next(), None);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn corpus_jsonl_round_trip(seed in 0u64..1000, docs in 1usize..8, with_years in proptest::bool::ANY) {
            let data = make_lda_dataset(&SynthLdaSpec {
                docs,
                seed,
                topics: 3,
                vocab: 11,
                doc_len: 4,
                alpha: 1.0,
                band_weight: 0.9,
                years: with_years.then_some(YearSpan { start: 1790, docs_per_year: 3 }),
            }).unwrap();
            let dir = tmp();
            let corpus_path = dir.path().join("c.jsonl");
            let vocab_path = dir.path().join("v.txt");
            let vocab: Vec<String> = (0..11).map(|i| format!("w{i}")).collect();
            save_corpus(&data.corpus, &corpus_path).unwrap();
            save_vocab(&vocab, &vocab_path).unwrap();
            let (back, _) = load_corpus_with_vocab(&corpus_path, &vocab_path).unwrap();
            prop_assert_eq!(back, data.corpus);
        }
    }
}
