use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lda::corpus::{Corpus, LdaPathSet, LdaPriors, TopicMatrix};
use crate::lda::counters::LdaCounters;
use crate::prob::{ln_gamma, sample_categorical, sample_dirichlet, Phase, RngStream, SimplexVector, StreamId};
use crate::run::{SamplerVariant, TracePoint};

/// Sample a synthetic corpus: per document a topic distribution
/// `theta ~ Dir(alpha)`, per token a topic from `theta` and a word from
/// that topic. Returns the corpus and the generating topic assignments.
pub fn lda_generate(
    topics: &TopicMatrix,
    alpha: f64,
    n_docs: usize,
    doc_len: usize,
    rng: &mut RngStream,
) -> Result<(Corpus, Vec<u32>)> {
    if n_docs == 0 || doc_len == 0 {
        return Err(Error::invalid("need n_docs >= 1 and doc_len >= 1"));
    }
    if !alpha.is_finite() || alpha <= 0.0 {
        return Err(Error::invalid(format!("alpha must be positive, got {alpha}")));
    }
    let t = topics.n_topics();
    let conc = vec![alpha; t];
    let mut tokens = Vec::with_capacity(n_docs * doc_len);
    let mut doc_of = Vec::with_capacity(n_docs * doc_len);
    let mut assignments = Vec::with_capacity(n_docs * doc_len);
    for d in 0..n_docs {
        let theta = sample_dirichlet(&conc, rng)?;
        for _ in 0..doc_len {
            let topic = sample_categorical(theta.weights(), rng)?;
            let word = sample_categorical(topics.topic(topic).weights(), rng)?;
            tokens.push(word as u32);
            doc_of.push(d as u32);
            assignments.push(topic as u32);
        }
    }
    let corpus = Corpus::new(tokens, doc_of, None, topics.vocab_size())?;
    Ok((corpus, assignments))
}

/// Draw every topic row from `Dir(eta + C^TW row)`. The topic-word counts
/// aggregate all paths, which is where the coupling between paths enters.
pub fn lda_sample_topics(
    counters: &LdaCounters,
    eta: f64,
    rng: &mut RngStream,
) -> Result<TopicMatrix> {
    if !eta.is_finite() || eta <= 0.0 {
        return Err(Error::invalid(format!("eta must be positive, got {eta}")));
    }
    let rows = (0..counters.n_topics())
        .map(|t| {
            let conc: Vec<f64> = counters
                .topic_word_row(t)
                .iter()
                .map(|&c| eta + c as f64)
                .collect();
            sample_dirichlet(&conc, rng)
        })
        .collect::<Result<Vec<_>>>()?;
    TopicMatrix::new(rows)
}

/// Posterior-mean topics `(C^TW + eta) / (C^T + W eta)`; the deterministic
/// point estimate reported by collapsed runs.
pub fn lda_posterior_mean_topics(counters: &LdaCounters, eta: f64) -> Result<TopicMatrix> {
    if !eta.is_finite() || eta <= 0.0 {
        return Err(Error::invalid(format!("eta must be positive, got {eta}")));
    }
    let rows = (0..counters.n_topics())
        .map(|t| {
            SimplexVector::from_unnormalized(
                counters
                    .topic_word_row(t)
                    .iter()
                    .map(|&c| eta + c as f64)
                    .collect(),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    TopicMatrix::new(rows)
}

/// Unnormalized site weights of the partially collapsed sampler:
/// `r_t = beta_t(word) * (C^DT_jdt + alpha)`. The site must already be
/// decremented from the counters.
pub fn lda_pc_site_weights(
    topics: &TopicMatrix,
    counters: &LdaCounters,
    path: usize,
    doc: usize,
    word: usize,
    alpha: f64,
) -> Result<Vec<f64>> {
    let t = counters.n_topics();
    if topics.n_topics() != t || topics.vocab_size() != counters.vocab_size() {
        return Err(Error::invalid("topics and counters disagree on dimensions"));
    }
    if path >= counters.m() || doc >= counters.n_docs() || word >= counters.vocab_size() {
        return Err(Error::invalid("site indices out of range"));
    }
    let mut weights = Vec::with_capacity(t);
    let mut total = 0.0;
    for topic in 0..t {
        let r = topics.topic(topic)[word] * (counters.doc_topic(path, doc, topic) as f64 + alpha);
        total += r;
        weights.push(r);
    }
    if total <= 0.0 {
        return Err(Error::DegenerateConditional(format!(
            "all topic weights are zero for word {word} in document {doc}"
        )));
    }
    Ok(weights)
}

/// Unnormalized site weights of the collapsed sampler:
/// `r_t = (C^TW_tw + eta) / (C^T_t + W eta) * (C^DT_jdt + alpha)`. The site
/// must already be decremented from the counters.
pub fn lda_collapsed_site_weights(
    counters: &LdaCounters,
    path: usize,
    doc: usize,
    word: usize,
    priors: &LdaPriors,
) -> Result<Vec<f64>> {
    priors.validate()?;
    if path >= counters.m() || doc >= counters.n_docs() || word >= counters.vocab_size() {
        return Err(Error::invalid("site indices out of range"));
    }
    let t = counters.n_topics();
    let w_eta = counters.vocab_size() as f64 * priors.eta;
    let mut weights = Vec::with_capacity(t);
    let mut total = 0.0;
    for topic in 0..t {
        let r = (counters.topic_word(topic, word) as f64 + priors.eta)
            / (counters.topic_total(topic) as f64 + w_eta)
            * (counters.doc_topic(path, doc, topic) as f64 + priors.alpha);
        total += r;
        weights.push(r);
    }
    if total <= 0.0 {
        return Err(Error::DegenerateConditional(format!(
            "all topic weights are zero for word {word} in document {doc}"
        )));
    }
    Ok(weights)
}

fn dirichlet_multinomial_ln(counts: impl Iterator<Item = u64>, k: usize, conc: f64) -> f64 {
    let mut total = 0u64;
    let mut acc = 0.0;
    for n in counts {
        if n > 0 {
            total += n;
            acc += ln_gamma(conc + n as f64) - ln_gamma(conc);
        }
    }
    if total == 0 {
        return 0.0;
    }
    let k = k as f64;
    acc + ln_gamma(k * conc) - ln_gamma(k * conc + total as f64)
}

pub(crate) fn log_joint_from_counters(counters: &LdaCounters, priors: &LdaPriors) -> f64 {
    let t = counters.n_topics();
    let w = counters.vocab_size();
    let mut total = 0.0;
    for topic in 0..t {
        total += dirichlet_multinomial_ln(counters.topic_word_row(topic).iter().copied(), w, priors.eta);
    }
    for j in 0..counters.m() {
        for d in 0..counters.n_docs() {
            total +=
                dirichlet_multinomial_ln(counters.doc_topic_row(j, d).iter().copied(), t, priors.alpha);
        }
    }
    total
}

/// `log \int P(phi) prod_j P(p^j, w | phi) dphi`: Dirichlet-multinomial
/// terms for every topic's word counts (cross-path) plus, per path and
/// document, the integrated topic-proportion terms.
pub fn lda_log_joint_collapsed(
    pathset: &LdaPathSet,
    corpus: &Corpus,
    priors: &LdaPriors,
) -> Result<f64> {
    priors.validate()?;
    let counters = LdaCounters::from_paths(pathset, corpus)?;
    Ok(log_joint_from_counters(&counters, priors))
}

/// `log P(p, w | topics)` for one assignment vector: emission terms plus
/// the per-document Dirichlet-multinomial marginal of the integrated
/// topic proportions.
pub fn lda_path_log_likelihood(
    topics: &TopicMatrix,
    alpha: f64,
    corpus: &Corpus,
    assignment: &[u32],
) -> Result<f64> {
    if assignment.len() != corpus.n_tokens() {
        return Err(Error::invalid("assignment length does not match corpus"));
    }
    if !alpha.is_finite() || alpha <= 0.0 {
        return Err(Error::invalid(format!("alpha must be positive, got {alpha}")));
    }
    let t = topics.n_topics();
    if assignment.iter().any(|&z| z as usize >= t) {
        return Err(Error::invalid(format!("assignment topic outside 0..{t}")));
    }
    let mut ll = 0.0;
    for (i, &z) in assignment.iter().enumerate() {
        ll += libm::log(topics.topic(z as usize)[corpus.tokens()[i] as usize]);
    }
    for d in 0..corpus.n_docs() {
        let mut doc_counts = vec![0u64; t];
        for i in corpus.doc_range(d) {
            doc_counts[assignment[i] as usize] += 1;
        }
        ll += dirichlet_multinomial_ln(doc_counts.into_iter(), t, alpha);
    }
    Ok(ll)
}

/// Empirical topic distribution of document `d` under one path's
/// assignments.
pub fn theta_doc(
    pathset: &LdaPathSet,
    corpus: &Corpus,
    d: usize,
    path_choice: usize,
) -> Result<SimplexVector> {
    if pathset.len() != corpus.n_tokens() {
        return Err(Error::invalid("assignments do not match corpus"));
    }
    if d >= corpus.n_docs() {
        return Err(Error::invalid(format!(
            "document {d} out of range 0..{}",
            corpus.n_docs()
        )));
    }
    if path_choice >= pathset.m() {
        return Err(Error::invalid(format!("path {path_choice} out of range")));
    }
    let range = corpus.doc_range(d);
    let k = range.len();
    if k == 0 {
        return Err(Error::invalid(format!("document {d} is empty")));
    }
    let mut weights = vec![0.0; pathset.n_topics()];
    for i in range {
        weights[pathset.path(path_choice)[i] as usize] += 1.0;
    }
    for w in &mut weights {
        *w /= k as f64;
    }
    SimplexVector::new(weights)
}

fn init_assignments(
    n: usize,
    n_topics: usize,
    m: usize,
    seed: u64,
    run_index: u32,
) -> Result<LdaPathSet> {
    let paths: Vec<Vec<u32>> = (0..m)
        .map(|j| {
            let mut rng = RngStream::new(seed, StreamId::new(run_index, j as u32, Phase::Init));
            (0..n).map(|_| rng.next_index(n_topics) as u32).collect()
        })
        .collect();
    LdaPathSet::new(paths, n_topics)
}

fn sweep_rngs(m: usize, seed: u64, run_index: u32) -> Vec<RngStream> {
    (0..m)
        .map(|j| RngStream::new(seed, StreamId::new(run_index, j as u32, Phase::Sweep)))
        .collect()
}

/// Multipath collapsed LDA Gibbs sampler: sites resampled against live
/// cross-path counters; strictly sequential, paths in outer loop and
/// token positions ascending.
pub struct CollapsedLdaSampler<'a> {
    corpus: &'a Corpus,
    pathset: LdaPathSet,
    counters: LdaCounters,
    priors: LdaPriors,
    rngs: Vec<RngStream>,
    weights: Vec<f64>,
}

impl<'a> CollapsedLdaSampler<'a> {
    pub fn new(
        corpus: &'a Corpus,
        n_topics: usize,
        m: usize,
        priors: LdaPriors,
        seed: u64,
        run_index: u32,
    ) -> Result<Self> {
        priors.validate()?;
        if n_topics == 0 || m == 0 {
            return Err(Error::invalid("need n_topics >= 1 and m >= 1"));
        }
        let pathset = init_assignments(corpus.n_tokens(), n_topics, m, seed, run_index)?;
        let counters = LdaCounters::from_paths(&pathset, corpus)?;
        Ok(CollapsedLdaSampler {
            corpus,
            pathset,
            counters,
            priors,
            rngs: sweep_rngs(m, seed, run_index),
            weights: vec![0.0; n_topics],
        })
    }

    /// One full pass over every (path, token) site.
    pub fn sweep(&mut self) -> Result<()> {
        let n = self.corpus.n_tokens();
        let m = self.pathset.m();
        let t_count = self.pathset.n_topics();
        let w_eta = self.corpus.vocab_size() as f64 * self.priors.eta;
        let alpha = self.priors.alpha;
        let eta = self.priors.eta;
        let tokens = self.corpus.tokens();
        let docs = self.corpus.doc_of();
        for j in 0..m {
            for i in 0..n {
                let word = tokens[i] as usize;
                let doc = docs[i] as usize;
                let old = self.pathset.path(j)[i] as usize;
                self.counters.remove_site(j, doc, word, old)?;
                for (topic, slot) in self.weights.iter_mut().enumerate().take(t_count) {
                    *slot = (self.counters.topic_word(topic, word) as f64 + eta)
                        / (self.counters.topic_total(topic) as f64 + w_eta)
                        * (self.counters.doc_topic(j, doc, topic) as f64 + alpha);
                }
                let new = sample_categorical(&self.weights, &mut self.rngs[j])?;
                self.counters.add_site(j, doc, word, new);
                self.pathset.paths_mut()[j][i] = new as u32;
            }
        }
        Ok(())
    }

    pub fn pathset(&self) -> &LdaPathSet {
        &self.pathset
    }

    pub fn counters(&self) -> &LdaCounters {
        &self.counters
    }

    pub fn log_joint(&self) -> f64 {
        log_joint_from_counters(&self.counters, &self.priors)
    }

    pub fn posterior_mean_topics(&self) -> Result<TopicMatrix> {
        lda_posterior_mean_topics(&self.counters, self.priors.eta)
    }

    pub fn into_pathset(self) -> LdaPathSet {
        self.pathset
    }
}

/// Multipath partially collapsed LDA Gibbs sampler: draw all topic rows
/// from their conditional given every path, then resample each path's
/// sites given the topics. Paths are conditionally independent given the
/// topics, so per-path sweeps may run concurrently; topic-word counters
/// are remerged afterwards, bit-identical to the sequential order.
pub struct PcLdaSampler<'a> {
    corpus: &'a Corpus,
    pathset: LdaPathSet,
    counters: LdaCounters,
    topics: TopicMatrix,
    priors: LdaPriors,
    param_rng: RngStream,
    rngs: Vec<RngStream>,
    parallel: bool,
}

impl<'a> PcLdaSampler<'a> {
    pub fn new(
        corpus: &'a Corpus,
        n_topics: usize,
        m: usize,
        priors: LdaPriors,
        seed: u64,
        run_index: u32,
        parallel: bool,
    ) -> Result<Self> {
        priors.validate()?;
        if n_topics == 0 || m == 0 {
            return Err(Error::invalid("need n_topics >= 1 and m >= 1"));
        }
        let pathset = init_assignments(corpus.n_tokens(), n_topics, m, seed, run_index)?;
        let counters = LdaCounters::from_paths(&pathset, corpus)?;
        // Point estimate before the first draw.
        let topics = lda_posterior_mean_topics(&counters, priors.eta)?;
        Ok(PcLdaSampler {
            corpus,
            pathset,
            counters,
            topics,
            priors,
            param_rng: RngStream::new(seed, StreamId::new(run_index, 0, Phase::Params)),
            rngs: sweep_rngs(m, seed, run_index),
            parallel,
        })
    }

    /// One iteration: topic draw, then a site sweep of every path.
    pub fn iterate(&mut self) -> Result<()> {
        self.topics = lda_sample_topics(&self.counters, self.priors.eta, &mut self.param_rng)?;
        let topics = &self.topics;
        let corpus = self.corpus;
        let alpha = self.priors.alpha;
        let paths = self.pathset.paths_mut();
        let chunks = self.counters.doc_topic_chunks_mut();
        if self.parallel {
            paths
                .par_iter_mut()
                .zip(chunks.into_par_iter())
                .zip(self.rngs.par_iter_mut())
                .try_for_each(|((path, doc_topic), rng)| {
                    pc_sweep_path(topics, corpus, alpha, path, doc_topic, rng)
                })?;
        } else {
            for ((path, doc_topic), rng) in
                paths.iter_mut().zip(chunks).zip(self.rngs.iter_mut())
            {
                pc_sweep_path(topics, corpus, alpha, path, doc_topic, rng)?;
            }
        }
        self.counters.rebuild_topic_word(&self.pathset, self.corpus);
        Ok(())
    }

    pub fn pathset(&self) -> &LdaPathSet {
        &self.pathset
    }

    pub fn counters(&self) -> &LdaCounters {
        &self.counters
    }

    pub fn topics(&self) -> &TopicMatrix {
        &self.topics
    }

    pub fn log_joint(&self) -> f64 {
        log_joint_from_counters(&self.counters, &self.priors)
    }

    pub fn into_parts(self) -> (TopicMatrix, LdaPathSet) {
        (self.topics, self.pathset)
    }
}

fn pc_sweep_path(
    topics: &TopicMatrix,
    corpus: &Corpus,
    alpha: f64,
    path: &mut [u32],
    doc_topic: &mut [u64],
    rng: &mut RngStream,
) -> Result<()> {
    let t_count = topics.n_topics();
    let tokens = corpus.tokens();
    let docs = corpus.doc_of();
    let mut weights = vec![0.0; t_count];
    for i in 0..path.len() {
        let word = tokens[i] as usize;
        let doc = docs[i] as usize;
        let old = path[i] as usize;
        doc_topic[doc * t_count + old] -= 1;
        for (topic, slot) in weights.iter_mut().enumerate() {
            *slot =
                topics.topic(topic)[word] * (doc_topic[doc * t_count + topic] as f64 + alpha);
        }
        let new = sample_categorical(&weights, rng)?;
        doc_topic[doc * t_count + new] += 1;
        path[i] = new as u32;
    }
    Ok(())
}

/// Configuration of one LDA sampler run.
#[derive(Clone, Debug)]
pub struct LdaRunConfig {
    pub variant: SamplerVariant,
    pub n_topics: usize,
    pub m: usize,
    pub iterations: usize,
    /// Measure the collapsed log joint every this many iterations.
    pub cadence: usize,
    pub seed: u64,
    pub run_index: u32,
    pub priors: LdaPriors,
    pub parallel_paths: bool,
}

impl LdaRunConfig {
    fn validate(&self) -> Result<()> {
        self.priors.validate()?;
        for (name, v) in [
            ("n_topics", self.n_topics),
            ("m", self.m),
            ("iterations", self.iterations),
            ("cadence", self.cadence),
        ] {
            if v == 0 {
                return Err(Error::invalid(format!("{name} must be >= 1")));
            }
        }
        Ok(())
    }
}

/// Artifacts of a finished LDA run: the topic estimate, the final path
/// set, per-document topic distributions from the first path, and the
/// periodic log-joint trace.
#[derive(Clone, Debug)]
pub struct LdaRun {
    pub topics: TopicMatrix,
    pub pathset: LdaPathSet,
    pub thetas: Vec<SimplexVector>,
    pub trace: Vec<TracePoint>,
}

/// Execute an LDA sampler run. The reported topic estimate is the
/// posterior mean for the collapsed variant and the last topic draw for
/// the partially collapsed one.
pub fn run_lda_sampler(config: &LdaRunConfig, corpus: &Corpus) -> Result<LdaRun> {
    config.validate()?;
    let mut trace = Vec::with_capacity(config.iterations / config.cadence + 1);
    let (topics, pathset) = match config.variant {
        SamplerVariant::Collapsed => {
            let mut sampler = CollapsedLdaSampler::new(
                corpus,
                config.n_topics,
                config.m,
                config.priors,
                config.seed,
                config.run_index,
            )?;
            trace.push(TracePoint {
                iteration: 0,
                value: sampler.log_joint(),
            });
            for iteration in 1..=config.iterations {
                sampler.sweep()?;
                if iteration % config.cadence == 0 {
                    trace.push(TracePoint {
                        iteration,
                        value: sampler.log_joint(),
                    });
                }
            }
            let topics = sampler.posterior_mean_topics()?;
            (topics, sampler.into_pathset())
        }
        SamplerVariant::PartiallyCollapsed => {
            let mut sampler = PcLdaSampler::new(
                corpus,
                config.n_topics,
                config.m,
                config.priors,
                config.seed,
                config.run_index,
                config.parallel_paths,
            )?;
            trace.push(TracePoint {
                iteration: 0,
                value: sampler.log_joint(),
            });
            for iteration in 1..=config.iterations {
                sampler.iterate()?;
                if iteration % config.cadence == 0 {
                    trace.push(TracePoint {
                        iteration,
                        value: sampler.log_joint(),
                    });
                }
            }
            sampler.into_parts()
        }
    };
    let thetas = (0..corpus.n_docs())
        .map(|d| theta_doc(&pathset, corpus, d, 0))
        .collect::<Result<Vec<_>>>()?;
    Ok(LdaRun {
        topics,
        pathset,
        thetas,
        trace,
    })
}
