//! Synthetic benchmark generators: the hard-to-learn two-state HMM and the
//! band-topic LDA corpus, both deterministic functions of their spec.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hmm::{hmm_generate, HmmParams, ObservationSequence};
use crate::lda::{lda_generate, Corpus, TopicMatrix};
use crate::prob::{sample_dirichlet, Phase, RngStream, SimplexVector, StreamId};

/// Spec of the synthetic two-state HMM dataset: symmetric transitions with
/// the given switching probability and seeded random emissions over
/// `n_symbols` that are close enough to be hard to tell apart.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthHmmSpec {
    /// Number of observations to emit.
    pub n: usize,
    pub seed: u64,
    #[serde(default = "default_switch_prob")]
    pub switch_prob: f64,
    #[serde(default = "default_hmm_symbols")]
    pub n_symbols: usize,
}

fn default_switch_prob() -> f64 {
    0.45
}

fn default_hmm_symbols() -> usize {
    10
}

/// Accepted range for the L1 distance between the two emission rows;
/// rejection-sampled so the states stay distinguishable but not easily so.
pub const EMISSION_L1_RANGE: (f64, f64) = (0.3, 0.7);

/// Build the hard-HMM ground truth and a sample of length `spec.n`.
///
/// Transitions are `[[1-p, p], [p, 1-p]]` with `p = switch_prob`, the
/// initial distribution is uniform, and the emission rows are Dir(1) draws
/// from the spec seed, rejected until their L1 distance falls inside
/// [`EMISSION_L1_RANGE`].
pub fn make_hard_hmm(spec: &SynthHmmSpec) -> Result<(HmmParams, ObservationSequence)> {
    if spec.n == 0 {
        return Err(Error::invalid("n must be >= 1"));
    }
    if !(spec.switch_prob > 0.0 && spec.switch_prob < 1.0) {
        return Err(Error::invalid(format!(
            "switch_prob must be in (0, 1), got {}",
            spec.switch_prob
        )));
    }
    if spec.n_symbols < 2 {
        return Err(Error::invalid("n_symbols must be >= 2"));
    }
    let p = spec.switch_prob;
    let initial = SimplexVector::uniform(2);
    let transitions = vec![
        SimplexVector::new(vec![1.0 - p, p])?,
        SimplexVector::new(vec![p, 1.0 - p])?,
    ];
    let mut emission_rng = RngStream::new(spec.seed, StreamId::new(0, 0, Phase::Generate));
    let conc = vec![1.0; spec.n_symbols];
    let emissions = loop {
        let e0 = sample_dirichlet(&conc, &mut emission_rng)?;
        let e1 = sample_dirichlet(&conc, &mut emission_rng)?;
        let d = e0.l1_distance(&e1);
        if d >= EMISSION_L1_RANGE.0 && d <= EMISSION_L1_RANGE.1 {
            break vec![e0, e1];
        }
    };
    let params = HmmParams::new(initial, transitions, emissions)?;
    let mut sequence_rng = RngStream::new(spec.seed, StreamId::new(0, 1, Phase::Generate));
    let (_, obs) = hmm_generate(&params, spec.n, &mut sequence_rng)?;
    Ok((params, obs))
}

/// Year stamping for generated corpora: document `d` is assigned
/// `start + d / docs_per_year`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct YearSpan {
    pub start: i32,
    pub docs_per_year: usize,
}

/// Spec of the synthetic band-topic LDA corpus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthLdaSpec {
    pub docs: usize,
    pub seed: u64,
    #[serde(default = "default_topics")]
    pub topics: usize,
    #[serde(default = "default_vocab")]
    pub vocab: usize,
    #[serde(default = "default_doc_len")]
    pub doc_len: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_band_weight")]
    pub band_weight: f64,
    #[serde(default)]
    pub years: Option<YearSpan>,
}

fn default_topics() -> usize {
    10
}

fn default_vocab() -> usize {
    100
}

fn default_doc_len() -> usize {
    10
}

fn default_alpha() -> f64 {
    1.0
}

fn default_band_weight() -> f64 {
    0.95
}

/// Overlapping band topics: band `k` is centered at
/// `round((w-1) k / (t-1))` with half-width `round(w / t)`, and each topic
/// mixes a uniform distribution on its band (weight `band_weight`) with a
/// uniform distribution on the whole vocabulary. Adjacent bands overlap
/// about half their width, so most vocabulary positions sit in exactly two
/// bands.
pub fn make_band_topics(t: usize, w: usize, band_weight: f64) -> Result<TopicMatrix> {
    if t < 2 {
        return Err(Error::invalid("need at least 2 topics"));
    }
    if w < t {
        return Err(Error::invalid("vocabulary must be at least as large as the topic count"));
    }
    if !(band_weight > 0.0 && band_weight < 1.0) {
        return Err(Error::invalid(format!(
            "band_weight must be in (0, 1), got {band_weight}"
        )));
    }
    let half_width = (w as f64 / t as f64).round() as i64;
    let floor = (1.0 - band_weight) / w as f64;
    let mut rows = Vec::with_capacity(t);
    for k in 0..t {
        let center = ((w - 1) as f64 * k as f64 / (t - 1) as f64).round() as i64;
        let lo = (center - half_width).max(0) as usize;
        let hi = ((center + half_width) as usize).min(w - 1);
        let band_len = (hi - lo + 1) as f64;
        let mut row = vec![floor; w];
        for slot in row.iter_mut().take(hi + 1).skip(lo) {
            *slot += band_weight / band_len;
        }
        rows.push(SimplexVector::new(row)?);
    }
    TopicMatrix::new(rows)
}

/// A generated LDA benchmark: ground-truth topics, the sampled corpus
/// (with year stamps when the spec asks for them), and the generating
/// topic assignments.
#[derive(Clone, Debug)]
pub struct SynthLda {
    pub topics: TopicMatrix,
    pub corpus: Corpus,
    pub assignments: Vec<u32>,
}

pub fn make_lda_dataset(spec: &SynthLdaSpec) -> Result<SynthLda> {
    if spec.docs == 0 {
        return Err(Error::invalid("docs must be >= 1"));
    }
    if let Some(years) = &spec.years {
        if years.docs_per_year == 0 {
            return Err(Error::invalid("docs_per_year must be >= 1"));
        }
    }
    let topics = make_band_topics(spec.topics, spec.vocab, spec.band_weight)?;
    let mut rng = RngStream::new(spec.seed, StreamId::new(0, 0, Phase::Generate));
    let (corpus, assignments) = lda_generate(&topics, spec.alpha, spec.docs, spec.doc_len, &mut rng)?;
    let corpus = match &spec.years {
        None => corpus,
        Some(span) => {
            let years: Vec<i32> = (0..spec.docs)
                .map(|d| span.start + (d / span.docs_per_year) as i32)
                .collect();
            Corpus::new(
                corpus.tokens().to_vec(),
                corpus.doc_of().to_vec(),
                Some(years),
                corpus.vocab_size(),
            )?
        }
    };
    Ok(SynthLda {
        topics,
        corpus,
        assignments,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn band_topics_rows_sum_to_one() {
        let topics = make_band_topics(10, 100, 0.95).unwrap();
        for t in 0..10 {
            let sum: f64 = topics.topic(t).weights().iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn band_topics_uniform_floor() {
        let topics = make_band_topics(10, 100, 0.95).unwrap();
        for t in 0..10 {
            let min = topics
                .topic(t)
                .weights()
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min);
            assert!((min - 0.0005).abs() < 1e-12, "min {min}");
        }
    }

    #[test]
    fn band_membership_structure_at_paper_scale() {
        // With t=10, w=100: 90 positions sit in exactly two bands, the
        // remaining 10 (multiples of 11, including both boundaries) in one.
        let topics = make_band_topics(10, 100, 0.95).unwrap();
        let floor = 0.05 / 100.0;
        let mut in_one = 0;
        let mut in_two = 0;
        for w in 0..100 {
            let bands = (0..10)
                .filter(|&t| topics.topic(t)[w] > floor + 1e-12)
                .count();
            match bands {
                1 => in_one += 1,
                2 => in_two += 1,
                other => panic!("position {w} lies in {other} bands"),
            }
        }
        assert_eq!(in_two, 90);
        assert_eq!(in_one, 10);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]
        #[test]
        fn band_topics_valid_across_shapes(t in 2usize..20, extra in 0usize..980) {
            let w = t + extra;
            let topics = make_band_topics(t, w, 0.95).unwrap();
            prop_assert_eq!(topics.n_topics(), t);
            prop_assert_eq!(topics.vocab_size(), w);
            for row in topics.topics() {
                let sum: f64 = row.weights().iter().sum();
                prop_assert!((sum - 1.0).abs() < 1e-9);
                prop_assert!(row.weights().iter().all(|&x| x > 0.0));
            }
        }
    }

    #[test]
    fn hard_hmm_rows_and_determinism() {
        let spec = SynthHmmSpec {
            n: 500,
            seed: 33,
            switch_prob: 0.45,
            n_symbols: 10,
        };
        let (params, obs) = make_hard_hmm(&spec).unwrap();
        for a in 0..2 {
            let sum: f64 = params.transition(a).weights().iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
        }
        assert_eq!(params.transition(0)[1], 0.45);
        assert_eq!(params.transition(1)[0], 0.45);
        let d = params.emission(0).l1_distance(params.emission(1));
        assert!((EMISSION_L1_RANGE.0..=EMISSION_L1_RANGE.1).contains(&d));
        let (params2, obs2) = make_hard_hmm(&spec).unwrap();
        assert_eq!(params, params2);
        assert_eq!(obs, obs2);
    }

    #[test]
    fn hard_hmm_symbol_frequencies_match_stationary_mixture() {
        // The symmetric chain has stationary distribution (0.5, 0.5), so
        // symbol frequencies converge to the even emission mixture.
        let spec = SynthHmmSpec {
            n: 200_000,
            seed: 7,
            switch_prob: 0.45,
            n_symbols: 10,
        };
        let (params, obs) = make_hard_hmm(&spec).unwrap();
        let mut freq = vec![0.0; 10];
        for &sym in obs.symbols() {
            freq[sym as usize] += 1.0;
        }
        for f in &mut freq {
            *f /= obs.len() as f64;
        }
        for v in 0..10 {
            let want = 0.5 * params.emission(0)[v] + 0.5 * params.emission(1)[v];
            assert!((freq[v] - want).abs() < 0.01, "symbol {v}: {} vs {want}", freq[v]);
        }
    }

    #[test]
    fn lda_dataset_shape_and_years() {
        let spec = SynthLdaSpec {
            docs: 20,
            seed: 5,
            topics: 4,
            vocab: 30,
            doc_len: 6,
            alpha: 1.0,
            band_weight: 0.9,
            years: Some(YearSpan {
                start: 1900,
                docs_per_year: 7,
            }),
        };
        let data = make_lda_dataset(&spec).unwrap();
        assert_eq!(data.corpus.n_tokens(), 120);
        assert_eq!(data.corpus.n_docs(), 20);
        let years = data.corpus.years().unwrap();
        assert_eq!(years[0], 1900);
        assert_eq!(years[6], 1900);
        assert_eq!(years[7], 1901);
        assert_eq!(years[19], 1902);
        // Deterministic regeneration.
        let again = make_lda_dataset(&spec).unwrap();
        assert_eq!(data.corpus, again.corpus);
        assert_eq!(data.assignments, again.assignments);
    }
}
