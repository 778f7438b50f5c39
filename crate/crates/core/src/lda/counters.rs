use crate::error::{Error, Result};
use crate::lda::corpus::{Corpus, LdaPathSet};

/// Sufficient statistics of an LDA path set. The topic-word counter and
/// its row totals are summed over all `m` paths (the model-averaging
/// coupling); the document-topic counter is kept per path.
#[derive(Clone, Debug, PartialEq)]
pub struct LdaCounters {
    t: usize,
    w: usize,
    m: usize,
    d: usize,
    topic_word: Vec<u64>,  // t * w, row-major, cross-path
    topic_total: Vec<u64>, // t, row sums of topic_word
    doc_topic: Vec<u64>,   // m * d * t, per path
    doc_total: Vec<u64>,   // d, document sizes (path-independent)
}

impl LdaCounters {
    pub fn from_paths(pathset: &LdaPathSet, corpus: &Corpus) -> Result<Self> {
        if pathset.len() != corpus.n_tokens() {
            return Err(Error::invalid(format!(
                "assignments cover {} tokens, corpus has {}",
                pathset.len(),
                corpus.n_tokens()
            )));
        }
        let t = pathset.n_topics();
        let w = corpus.vocab_size();
        let m = pathset.m();
        let d = corpus.n_docs();
        let mut counters = LdaCounters {
            t,
            w,
            m,
            d,
            topic_word: vec![0; t * w],
            topic_total: vec![0; t],
            doc_topic: vec![0; m * d * t],
            doc_total: vec![0; d],
        };
        for dd in 0..d {
            counters.doc_total[dd] = corpus.doc_len(dd) as u64;
        }
        for (j, path) in pathset.assignments().iter().enumerate() {
            for (i, &topic) in path.iter().enumerate() {
                let word = corpus.tokens()[i] as usize;
                let doc = corpus.doc_of()[i] as usize;
                let topic = topic as usize;
                counters.topic_word[topic * w + word] += 1;
                counters.topic_total[topic] += 1;
                counters.doc_topic[(j * d + doc) * t + topic] += 1;
            }
        }
        Ok(counters)
    }

    pub fn n_topics(&self) -> usize {
        self.t
    }

    pub fn vocab_size(&self) -> usize {
        self.w
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n_docs(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn topic_word(&self, topic: usize, word: usize) -> u64 {
        self.topic_word[topic * self.w + word]
    }

    #[inline]
    pub fn topic_total(&self, topic: usize) -> u64 {
        self.topic_total[topic]
    }

    #[inline]
    pub fn doc_topic(&self, path: usize, doc: usize, topic: usize) -> u64 {
        self.doc_topic[(path * self.d + doc) * self.t + topic]
    }

    pub fn doc_total(&self, doc: usize) -> u64 {
        self.doc_total[doc]
    }

    /// Topic-word counts of one topic.
    pub fn topic_word_row(&self, topic: usize) -> &[u64] {
        &self.topic_word[topic * self.w..(topic + 1) * self.w]
    }

    /// Document-topic counts of one (path, document) pair.
    pub fn doc_topic_row(&self, path: usize, doc: usize) -> &[u64] {
        let base = (path * self.d + doc) * self.t;
        &self.doc_topic[base..base + self.t]
    }

    /// Remove one site's contribution before resampling it.
    pub fn remove_site(&mut self, path: usize, doc: usize, word: usize, topic: usize) -> Result<()> {
        Self::dec(&mut self.topic_word[topic * self.w + word])?;
        Self::dec(&mut self.topic_total[topic])?;
        Self::dec(&mut self.doc_topic[(path * self.d + doc) * self.t + topic])?;
        Ok(())
    }

    /// Inverse of [`LdaCounters::remove_site`].
    pub fn add_site(&mut self, path: usize, doc: usize, word: usize, topic: usize) {
        self.topic_word[topic * self.w + word] += 1;
        self.topic_total[topic] += 1;
        self.doc_topic[(path * self.d + doc) * self.t + topic] += 1;
    }

    fn dec(slot: &mut u64) -> Result<()> {
        *slot = slot.checked_sub(1).ok_or_else(|| {
            Error::InternalConsistency(
                "counter underflow: counters do not match the path set".into(),
            )
        })?;
        Ok(())
    }

    /// Mutable per-path document-topic blocks, one contiguous slice per
    /// path, for conditionally independent sweeps.
    pub(crate) fn doc_topic_chunks_mut(&mut self) -> Vec<&mut [u64]> {
        self.doc_topic.chunks_mut(self.d * self.t).collect()
    }

    /// Rebuild the topic-word side from the path set (used after merged
    /// partially collapsed sweeps).
    pub(crate) fn rebuild_topic_word(&mut self, pathset: &LdaPathSet, corpus: &Corpus) {
        self.topic_word.iter_mut().for_each(|c| *c = 0);
        self.topic_total.iter_mut().for_each(|c| *c = 0);
        for path in pathset.assignments() {
            for (i, &topic) in path.iter().enumerate() {
                let word = corpus.tokens()[i] as usize;
                self.topic_word[topic as usize * self.w + word] += 1;
                self.topic_total[topic as usize] += 1;
            }
        }
    }

    /// Full rebuild-and-compare against the path set.
    pub fn verify_against(&self, pathset: &LdaPathSet, corpus: &Corpus) -> Result<()> {
        let fresh = LdaCounters::from_paths(pathset, corpus)?;
        if *self != fresh {
            return Err(Error::InternalConsistency(
                "incremental counters diverge from a fresh rebuild".into(),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_corpus() -> Corpus {
        // Two documents over a 3-word vocabulary, 5 tokens total.
        Corpus::from_docs(&[vec![0, 1, 0], vec![2, 1]], None, 3).unwrap()
    }

    #[test]
    fn counter_identities_hold() {
        let corpus = tiny_corpus();
        let pathset =
            LdaPathSet::new(vec![vec![0, 1, 0, 1, 1], vec![1, 1, 0, 0, 1]], 2).unwrap();
        let c = LdaCounters::from_paths(&pathset, &corpus).unwrap();
        // C^T is the row sum of C^TW.
        for t in 0..2 {
            let row_sum: u64 = c.topic_word_row(t).iter().sum();
            assert_eq!(row_sum, c.topic_total(t));
        }
        // Per path and document, C^DT sums to the document size.
        for j in 0..2 {
            for d in 0..2 {
                let s: u64 = c.doc_topic_row(j, d).iter().sum();
                assert_eq!(s, c.doc_total(d));
            }
        }
        // Grand total is m * N.
        let grand: u64 = (0..2).map(|t| c.topic_total(t)).sum();
        assert_eq!(grand, 2 * 5);
    }

    #[test]
    fn identical_paths_scale_topic_word_counts() {
        let corpus = tiny_corpus();
        let path = vec![0u32, 1, 0, 1, 1];
        let single = LdaCounters::from_paths(
            &LdaPathSet::new(vec![path.clone()], 2).unwrap(),
            &corpus,
        )
        .unwrap();
        let triple = LdaCounters::from_paths(
            &LdaPathSet::new(vec![path.clone(), path.clone(), path], 2).unwrap(),
            &corpus,
        )
        .unwrap();
        for t in 0..2 {
            for w in 0..3 {
                assert_eq!(triple.topic_word(t, w), 3 * single.topic_word(t, w));
            }
        }
    }

    #[test]
    fn remove_add_round_trip() {
        let corpus = tiny_corpus();
        let pathset = LdaPathSet::new(vec![vec![0, 1, 0, 1, 1]], 2).unwrap();
        let mut c = LdaCounters::from_paths(&pathset, &corpus).unwrap();
        let before = c.clone();
        c.remove_site(0, 0, 1, 1).unwrap();
        assert_ne!(c, before);
        c.add_site(0, 0, 1, 1);
        assert_eq!(c, before);
        c.verify_against(&pathset, &corpus).unwrap();
    }

    #[test]
    fn underflow_detected() {
        let corpus = tiny_corpus();
        let pathset = LdaPathSet::new(vec![vec![0, 0, 0, 0, 0]], 2).unwrap();
        let mut c = LdaCounters::from_paths(&pathset, &corpus).unwrap();
        let err = c.remove_site(0, 0, 0, 1).unwrap_err();
        assert!(matches!(err, Error::InternalConsistency(_)));
    }
}
