use crate::error::{Error, Result};
use crate::prob::SimplexVector;

/// A tokenized corpus: one token stream with document boundaries, plus
/// optional per-document year stamps. Documents are contiguous blocks with
/// ids `0..doc_count` in stream order.
#[derive(Clone, Debug, PartialEq)]
pub struct Corpus {
    tokens: Vec<u32>,
    doc_of: Vec<u32>,
    doc_years: Option<Vec<i32>>,
    vocab_size: usize,
    doc_count: usize,
    doc_offsets: Vec<usize>, // doc_count + 1 boundaries into the stream
}

impl Corpus {
    pub fn new(
        tokens: Vec<u32>,
        doc_of: Vec<u32>,
        doc_years: Option<Vec<i32>>,
        vocab_size: usize,
    ) -> Result<Self> {
        if tokens.is_empty() {
            return Err(Error::invalid("corpus must contain at least one token"));
        }
        if tokens.len() != doc_of.len() {
            return Err(Error::invalid(format!(
                "tokens and doc_of lengths differ: {} vs {}",
                tokens.len(),
                doc_of.len()
            )));
        }
        if let Some((i, &t)) = tokens
            .iter()
            .enumerate()
            .find(|(_, &t)| t as usize >= vocab_size)
        {
            return Err(Error::invalid(format!(
                "token {t} at position {i} is outside the vocabulary 0..{vocab_size}"
            )));
        }
        // Document ids must start at 0 and step by at most one, which also
        // forces contiguity and non-emptiness.
        if doc_of[0] != 0 {
            return Err(Error::invalid("document ids must start at 0"));
        }
        let mut doc_offsets = vec![0usize];
        for (i, pair) in doc_of.windows(2).enumerate() {
            if pair[1] == pair[0] + 1 {
                doc_offsets.push(i + 1);
            } else if pair[1] != pair[0] {
                return Err(Error::invalid(format!(
                    "document ids are not contiguous at position {}: {} then {}",
                    i + 1,
                    pair[0],
                    pair[1]
                )));
            }
        }
        doc_offsets.push(tokens.len());
        let doc_count = doc_offsets.len() - 1;
        if let Some(years) = &doc_years {
            if years.len() != doc_count {
                return Err(Error::invalid(format!(
                    "{} year stamps for {doc_count} documents",
                    years.len()
                )));
            }
        }
        Ok(Corpus {
            tokens,
            doc_of,
            doc_years,
            vocab_size,
            doc_count,
            doc_offsets,
        })
    }

    /// Builds a corpus from per-document token lists.
    pub fn from_docs(
        docs: &[Vec<u32>],
        doc_years: Option<Vec<i32>>,
        vocab_size: usize,
    ) -> Result<Self> {
        if let Some((d, _)) = docs.iter().enumerate().find(|(_, toks)| toks.is_empty()) {
            return Err(Error::format(format!("document {d} has no tokens")));
        }
        let mut tokens = Vec::new();
        let mut doc_of = Vec::new();
        for (d, toks) in docs.iter().enumerate() {
            tokens.extend_from_slice(toks);
            doc_of.extend(std::iter::repeat(d as u32).take(toks.len()));
        }
        Corpus::new(tokens, doc_of, doc_years, vocab_size)
    }

    pub fn n_tokens(&self) -> usize {
        self.tokens.len()
    }

    pub fn n_docs(&self) -> usize {
        self.doc_count
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn tokens(&self) -> &[u32] {
        &self.tokens
    }

    pub fn doc_of(&self) -> &[u32] {
        &self.doc_of
    }

    pub fn years(&self) -> Option<&[i32]> {
        self.doc_years.as_deref()
    }

    pub fn doc_range(&self, d: usize) -> std::ops::Range<usize> {
        self.doc_offsets[d]..self.doc_offsets[d + 1]
    }

    pub fn doc_len(&self, d: usize) -> usize {
        self.doc_offsets[d + 1] - self.doc_offsets[d]
    }
}

/// LDA parameters: `T` topics, each a distribution over the vocabulary.
#[derive(Clone, Debug, PartialEq)]
pub struct TopicMatrix {
    topics: Vec<SimplexVector>,
}

impl TopicMatrix {
    pub fn new(topics: Vec<SimplexVector>) -> Result<Self> {
        if topics.is_empty() {
            return Err(Error::invalid("topic matrix needs at least one topic"));
        }
        let w = topics[0].len();
        if topics.iter().any(|t| t.len() != w) {
            return Err(Error::invalid("topics must share one vocabulary size"));
        }
        Ok(TopicMatrix { topics })
    }

    pub fn n_topics(&self) -> usize {
        self.topics.len()
    }

    pub fn vocab_size(&self) -> usize {
        self.topics[0].len()
    }

    pub fn topic(&self, t: usize) -> &SimplexVector {
        &self.topics[t]
    }

    pub fn topics(&self) -> &[SimplexVector] {
        &self.topics
    }
}

/// `m` topic-assignment vectors, one topic id per token per path.
#[derive(Clone, Debug, PartialEq)]
pub struct LdaPathSet {
    assignments: Vec<Vec<u32>>,
    n_topics: usize,
}

impl LdaPathSet {
    pub fn new(assignments: Vec<Vec<u32>>, n_topics: usize) -> Result<Self> {
        if assignments.is_empty() {
            return Err(Error::invalid("path set needs at least one path"));
        }
        let n = assignments[0].len();
        if n == 0 {
            return Err(Error::invalid("assignments must be non-empty"));
        }
        for (j, p) in assignments.iter().enumerate() {
            if p.len() != n {
                return Err(Error::invalid(format!(
                    "path {j} has length {}, expected {n}",
                    p.len()
                )));
            }
            if p.iter().any(|&t| t as usize >= n_topics) {
                return Err(Error::invalid(format!(
                    "path {j} contains a topic outside 0..{n_topics}"
                )));
            }
        }
        Ok(LdaPathSet {
            assignments,
            n_topics,
        })
    }

    pub fn m(&self) -> usize {
        self.assignments.len()
    }

    pub fn len(&self) -> usize {
        self.assignments[0].len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn n_topics(&self) -> usize {
        self.n_topics
    }

    pub fn assignments(&self) -> &[Vec<u32>] {
        &self.assignments
    }

    pub fn path(&self, j: usize) -> &[u32] {
        &self.assignments[j]
    }

    pub(crate) fn paths_mut(&mut self) -> &mut [Vec<u32>] {
        &mut self.assignments
    }
}

/// Dirichlet hyperparameters: `eta` for words in a topic, `alpha` for
/// topics in a document.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LdaPriors {
    pub eta: f64,
    pub alpha: f64,
}

impl LdaPriors {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("eta", self.eta), ("alpha", self.alpha)] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_accepts_contiguous_docs() {
        let c = Corpus::new(vec![0, 1, 2, 1], vec![0, 0, 1, 1], None, 3).unwrap();
        assert_eq!(c.n_docs(), 2);
        assert_eq!(c.doc_range(0), 0..2);
        assert_eq!(c.doc_range(1), 2..4);
        assert_eq!(c.doc_len(1), 2);
    }

    #[test]
    fn corpus_rejects_gaps_and_disorder() {
        assert!(Corpus::new(vec![0, 1], vec![0, 2], None, 2).is_err());
        assert!(Corpus::new(vec![0, 1, 0], vec![0, 1, 0], None, 2).is_err());
        assert!(Corpus::new(vec![0, 1], vec![1, 1], None, 2).is_err());
    }

    #[test]
    fn corpus_rejects_out_of_vocab_tokens() {
        assert!(Corpus::new(vec![0, 5], vec![0, 0], None, 3).is_err());
    }

    #[test]
    fn corpus_year_stamp_length_checked() {
        assert!(Corpus::new(vec![0, 1], vec![0, 1], Some(vec![1990]), 2).is_err());
        let c = Corpus::new(vec![0, 1], vec![0, 1], Some(vec![1990, 1991]), 2).unwrap();
        assert_eq!(c.years(), Some(&[1990, 1991][..]));
    }

    #[test]
    fn from_docs_rejects_empty_documents() {
        let err = Corpus::from_docs(&[vec![0], vec![], vec![1]], None, 2).unwrap_err();
        assert!(err.to_string().contains("document 1"));
    }

    #[test]
    fn pathset_shape_checks() {
        assert!(LdaPathSet::new(vec![vec![0, 1], vec![2, 0]], 2).is_err());
        assert!(LdaPathSet::new(vec![vec![0, 1], vec![0]], 2).is_err());
        assert!(LdaPathSet::new(vec![vec![0, 1]], 2).is_ok());
    }

    #[test]
    fn priors_must_be_positive() {
        assert!(LdaPriors { eta: 0.0, alpha: 1.0 }.validate().is_err());
        assert!(LdaPriors { eta: 0.01, alpha: -1.0 }.validate().is_err());
        assert!(LdaPriors { eta: 0.01, alpha: 1.0 }.validate().is_ok());
    }
}
