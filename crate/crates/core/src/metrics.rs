//! Quantitative evaluation: topic-reconstruction distance and the
//! time-concentration statistics (yearly topic tables, entropy curves,
//! quantile-bucket lengths and their histograms).

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::lda::TopicMatrix;
use crate::prob::SimplexVector;

/// Mean, over ground-truth topics, of the L1 distance to the closest
/// learned topic. Zero iff every ground-truth topic appears exactly among
/// the learned ones; at most 2 (disjoint supports). Ties in the argmin go
/// to the lowest learned index, which cannot change the value.
pub fn disc(ground: &TopicMatrix, learned: &TopicMatrix) -> Result<f64> {
    if ground.vocab_size() != learned.vocab_size() {
        return Err(Error::invalid(format!(
            "vocabulary sizes differ: {} vs {}",
            ground.vocab_size(),
            learned.vocab_size()
        )));
    }
    let mut total = 0.0;
    for g in ground.topics() {
        let mut best = f64::INFINITY;
        for l in learned.topics() {
            let d = g.l1_distance(l);
            if d < best {
                best = d;
            }
        }
        total += best;
    }
    Ok(total / ground.n_topics() as f64)
}

/// Per-year topic distributions: the unweighted mean of the document
/// distributions of each year, one row per distinct year, sorted by year.
#[derive(Clone, Debug, PartialEq)]
pub struct YearTopicTable {
    years: Vec<i32>,
    theta_y: Vec<SimplexVector>,
}

impl YearTopicTable {
    pub fn years(&self) -> &[i32] {
        &self.years
    }

    pub fn theta(&self, idx: usize) -> &SimplexVector {
        &self.theta_y[idx]
    }

    pub fn n_topics(&self) -> usize {
        self.theta_y[0].len()
    }

    pub fn len(&self) -> usize {
        self.years.len()
    }

    pub fn is_empty(&self) -> bool {
        self.years.is_empty()
    }
}

/// Average the per-document topic distributions within each year.
pub fn yearly_topic_table(
    doc_thetas: &[SimplexVector],
    doc_years: &[i32],
) -> Result<YearTopicTable> {
    if doc_thetas.is_empty() {
        return Err(Error::invalid("no documents"));
    }
    if doc_thetas.len() != doc_years.len() {
        return Err(Error::invalid(format!(
            "{} theta rows but {} year stamps",
            doc_thetas.len(),
            doc_years.len()
        )));
    }
    let t = doc_thetas[0].len();
    if doc_thetas.iter().any(|th| th.len() != t) {
        return Err(Error::invalid("document distributions differ in dimension"));
    }
    let mut buckets: BTreeMap<i32, (Vec<f64>, usize)> = BTreeMap::new();
    for (theta, &year) in doc_thetas.iter().zip(doc_years) {
        let entry = buckets.entry(year).or_insert_with(|| (vec![0.0; t], 0));
        for (acc, &w) in entry.0.iter_mut().zip(theta.weights()) {
            *acc += w;
        }
        entry.1 += 1;
    }
    let mut years = Vec::with_capacity(buckets.len());
    let mut theta_y = Vec::with_capacity(buckets.len());
    for (year, (mut sums, count)) in buckets {
        for s in &mut sums {
            *s /= count as f64;
        }
        years.push(year);
        theta_y.push(SimplexVector::new(sums)?);
    }
    Ok(YearTopicTable { years, theta_y })
}

/// Entropy (nats) of each year's topic distribution, in year order.
pub fn yearly_entropy_curve(table: &YearTopicTable) -> Vec<(i32, f64)> {
    table
        .years
        .iter()
        .zip(&table.theta_y)
        .map(|(&y, theta)| (y, theta.entropy()))
        .collect()
}

/// The weight of one topic across the years, in year order.
pub fn topic_weight_series(table: &YearTopicTable, topic: usize) -> Result<Vec<(i32, f64)>> {
    if topic >= table.n_topics() {
        return Err(Error::invalid(format!(
            "topic {topic} out of range 0..{}",
            table.n_topics()
        )));
    }
    Ok(table
        .years
        .iter()
        .zip(&table.theta_y)
        .map(|(&y, theta)| (y, theta[topic]))
        .collect())
}

/// Total topic weight `w_t = sum_y theta_y(t)`.
pub fn total_topic_weight(table: &YearTopicTable, topic: usize) -> Result<f64> {
    Ok(topic_weight_series(table, topic)?
        .iter()
        .map(|&(_, w)| w)
        .sum())
}

/// Quantile buckets of one topic's weight series: `floor(1/gamma)`
/// consecutive year intervals, each holding a `gamma` fraction of the
/// total weight.
#[derive(Clone, Debug, PartialEq)]
pub struct BucketSet {
    pub topic: usize,
    pub gamma: f64,
    /// Whole years spanned by each bucket, inclusive; at least 1.
    pub bucket_lengths: Vec<u32>,
}

/// Walk the series in ascending year order accumulating weight and close
/// bucket `k` at the first year where the cumulative weight reaches
/// `(k+1) * gamma * total`. The closing year belongs to the bucket it
/// closes; the next bucket starts at the following year. A year whose
/// weight crosses several boundaries closes all of them (the extra
/// buckets have length 1).
pub fn quantile_buckets(series: &[(i32, f64)], gamma: f64) -> Result<BucketSet> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::invalid(format!("gamma must be in (0, 1), got {gamma}")));
    }
    if series.windows(2).any(|w| w[0].0 >= w[1].0) {
        return Err(Error::invalid("series years must be strictly ascending"));
    }
    if series.iter().any(|&(_, w)| !w.is_finite() || w < 0.0) {
        return Err(Error::invalid("series weights must be finite and non-negative"));
    }
    let total: f64 = series.iter().map(|&(_, w)| w).sum();
    if total <= 0.0 {
        return Err(Error::invalid("series has zero total weight"));
    }
    let n_buckets = (1.0 / gamma + 1e-9).floor() as usize;
    let slack = 1e-9 * total;
    let mut lengths = Vec::with_capacity(n_buckets);
    let mut cumulative = 0.0;
    let mut bucket_start = series[0].0;
    let mut idx = 0;
    while lengths.len() < n_buckets && idx < series.len() {
        let (year, weight) = series[idx];
        cumulative += weight;
        while lengths.len() < n_buckets {
            let threshold = (lengths.len() + 1) as f64 * gamma * total;
            if cumulative + slack < threshold {
                break;
            }
            lengths.push((year - bucket_start + 1).max(1) as u32);
            bucket_start = year + 1;
        }
        idx += 1;
    }
    // Float rounding can leave the final boundary unreached; the last year
    // closes whatever remains.
    while lengths.len() < n_buckets {
        let year = series.last().unwrap().0;
        lengths.push((year - bucket_start + 1).max(1) as u32);
        bucket_start = year + 1;
    }
    Ok(BucketSet {
        topic: 0,
        gamma,
        bucket_lengths: lengths,
    })
}

/// How bucket lengths are weighted when pooled into a histogram.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Weighting {
    /// Every bucket counts 1.
    None,
    /// Every bucket of topic `t` carries mass proportional to the total
    /// topic weight `w_t`, normalized so the histogram mass equals the raw
    /// bucket count.
    ByTopicWeight,
}

/// Quantile buckets of every topic of one table.
pub fn table_buckets(table: &YearTopicTable, gamma: f64) -> Result<Vec<BucketSet>> {
    (0..table.n_topics())
        .map(|t| {
            let series = topic_weight_series(table, t)?;
            let mut buckets = quantile_buckets(&series, gamma)?;
            buckets.topic = t;
            Ok(buckets)
        })
        .collect()
}

/// Histogram of bucket lengths pooled over all topics of all tables, bin
/// width one year. Returns `(length, mass)` pairs sorted by length.
pub fn bucket_histogram(
    tables: &[&YearTopicTable],
    gamma: f64,
    weighting: Weighting,
) -> Result<Vec<(u32, f64)>> {
    if tables.is_empty() {
        return Err(Error::invalid("no tables given"));
    }
    let mut entries: Vec<(u32, f64)> = Vec::new(); // (length, topic weight)
    let mut total_weight = 0.0;
    let mut total_buckets = 0usize;
    for table in tables {
        for t in 0..table.n_topics() {
            let series = topic_weight_series(table, t)?;
            let buckets = quantile_buckets(&series, gamma)?;
            let w_t = total_topic_weight(table, t)?;
            total_weight += w_t * buckets.bucket_lengths.len() as f64;
            total_buckets += buckets.bucket_lengths.len();
            for &len in &buckets.bucket_lengths {
                entries.push((len, w_t));
            }
        }
    }
    let mut hist: BTreeMap<u32, f64> = BTreeMap::new();
    for (len, w_t) in entries {
        let mass = match weighting {
            Weighting::None => 1.0,
            Weighting::ByTopicWeight => w_t * total_buckets as f64 / total_weight,
        };
        *hist.entry(len).or_insert(0.0) += mass;
    }
    Ok(hist.into_iter().collect())
}
