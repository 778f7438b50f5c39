use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hmm::counts::HmmCounts;
use crate::hmm::model::{
    forward_log_likelihood, HmmParams, HmmPathSet, HmmPriors, ObservationSequence,
};
use crate::prob::{ln_gamma, sample_categorical, sample_dirichlet, Phase, RngStream, SimplexVector, StreamId};
use crate::run::{SamplerVariant, TracePoint};

/// Draw parameters from their conditional given the path set: every row is
/// a Dirichlet with the prior concentration plus the matching count row,
/// counts summed over all paths. Draw order is fixed (initial, transition
/// rows in state order, emission rows in state order).
pub fn hmm_sample_params(
    counts: &HmmCounts,
    priors: &HmmPriors,
    rng: &mut RngStream,
) -> Result<HmmParams> {
    priors.validate()?;
    let s = counts.n_states();
    let initial = sample_dirichlet(&conc_row(counts.init(), priors.init_conc), rng)?;
    let mut transitions = Vec::with_capacity(s);
    for a in 0..s {
        transitions.push(sample_dirichlet(
            &conc_row(counts.trans_counts_of(a), priors.trans_conc),
            rng,
        )?);
    }
    let mut emissions = Vec::with_capacity(s);
    for a in 0..s {
        emissions.push(sample_dirichlet(
            &conc_row(counts.emit_counts_of(a), priors.emit_conc),
            rng,
        )?);
    }
    HmmParams::new(initial, transitions, emissions)
}

/// Posterior-mean parameters given the counts: each row is
/// `(count + conc) / (total + K * conc)`. Deterministic, used as the point
/// estimate when tracing collapsed runs.
pub fn hmm_posterior_mean_params(counts: &HmmCounts, priors: &HmmPriors) -> Result<HmmParams> {
    priors.validate()?;
    let s = counts.n_states();
    let initial = mean_row(counts.init(), priors.init_conc)?;
    let transitions = (0..s)
        .map(|a| mean_row(counts.trans_counts_of(a), priors.trans_conc))
        .collect::<Result<Vec<_>>>()?;
    let emissions = (0..s)
        .map(|a| mean_row(counts.emit_counts_of(a), priors.emit_conc))
        .collect::<Result<Vec<_>>>()?;
    HmmParams::new(initial, transitions, emissions)
}

fn conc_row(counts: &[u64], conc: f64) -> Vec<f64> {
    counts.iter().map(|&c| conc + c as f64).collect()
}

fn mean_row(counts: &[u64], conc: f64) -> Result<SimplexVector> {
    SimplexVector::from_unnormalized(conc_row(counts, conc))
}

/// Full conditional of one site given the parameters (the partially
/// collapsed move): incoming transition (or initial probability at the
/// first position), outgoing transition (absent at the last position) and
/// the emission of the observed symbol.
pub fn hmm_pc_site_dist(
    params: &HmmParams,
    path: &[u32],
    i: usize,
    w: &ObservationSequence,
) -> Result<SimplexVector> {
    let s = params.n_states();
    let n = path.len();
    if n != w.len() {
        return Err(Error::invalid("path and observation lengths differ"));
    }
    if i >= n {
        return Err(Error::invalid(format!("site {i} outside 0..{n}")));
    }
    if params.n_symbols() != w.n_symbols() {
        return Err(Error::invalid("alphabet mismatch"));
    }
    let sym = w.symbols()[i] as usize;
    let mut weights = vec![0.0; s];
    for (t, slot) in weights.iter_mut().enumerate() {
        let left = if i == 0 {
            params.initial()[t]
        } else {
            params.transition(path[i - 1] as usize)[t]
        };
        let right = if i + 1 < n {
            params.transition(t)[path[i + 1] as usize]
        } else {
            1.0
        };
        *slot = left * right * params.emission(t)[sym];
    }
    SimplexVector::from_unnormalized(weights)
        .map_err(|_| Error::DegenerateConditional(format!("all candidate weights at site {i} are zero")))
}

/// Unnormalized collapsed conditional weights for a site whose own
/// contributions have already been removed from `counts`.
///
/// Candidate value `t` re-inserts up to two transitions and one emission,
/// so the weight is a product of sequential predictives. When the incoming
/// transition also has source `t` (prev == t), it raises row `t`'s total
/// before the outgoing transition is added, hence the +1 denominator
/// correction, and additionally the +1 numerator correction when the
/// outgoing transition lands on the same cell (prev == t && next == t).
fn collapsed_site_weights(
    counts: &HmmCounts,
    prev: Option<u32>,
    next: Option<u32>,
    sym: u32,
    priors: &HmmPriors,
    out: &mut [f64],
) {
    let s = counts.n_states() as f64;
    let w_dim = counts.n_symbols() as f64;
    let lam = priors.trans_conc;
    let eta = priors.emit_conc;
    let sym = sym as usize;
    for (t, slot) in out.iter_mut().enumerate() {
        let mut weight = match prev {
            None => counts.init()[t] as f64 + priors.init_conc,
            Some(a) => counts.trans(a as usize, t) as f64 + lam,
        };
        if let Some(b) = next {
            let same_in = prev == Some(t as u32);
            let num_corr = if same_in && b as usize == t { 1.0 } else { 0.0 };
            let den_corr = if same_in { 1.0 } else { 0.0 };
            weight *= (counts.trans(t, b as usize) as f64 + lam + num_corr)
                / (counts.trans_row(t) as f64 + s * lam + den_corr);
        }
        weight *= (counts.emit(t, sym) as f64 + eta) / (counts.emit_row(t) as f64 + w_dim * eta);
        *slot = weight;
    }
}

/// The exact collapsed conditional `P(p_i^j = t | everything else)` with the
/// parameters integrated out, as a normalized distribution over states.
pub fn hmm_collapsed_site_dist(
    counts: &HmmCounts,
    pathset: &HmmPathSet,
    j: usize,
    i: usize,
    w: &ObservationSequence,
    priors: &HmmPriors,
) -> Result<SimplexVector> {
    priors.validate()?;
    if counts.n_states() != pathset.n_states()
        || counts.m() != pathset.m()
        || counts.seq_len() != pathset.len()
        || counts.n_symbols() != w.n_symbols()
        || pathset.len() != w.len()
    {
        return Err(Error::InternalConsistency(
            "counts, path set and observations disagree on dimensions".into(),
        ));
    }
    if j >= pathset.m() || i >= pathset.len() {
        return Err(Error::invalid(format!("site ({j}, {i}) out of range")));
    }
    let path = pathset.path(j);
    let prev = (i > 0).then(|| path[i - 1]);
    let next = (i + 1 < path.len()).then(|| path[i + 1]);
    let sym = w.symbols()[i];
    let mut decremented = counts.clone();
    decremented.remove_site(prev, path[i], next, sym)?;
    let mut weights = vec![0.0; pathset.n_states()];
    collapsed_site_weights(&decremented, prev, next, sym, priors, &mut weights);
    SimplexVector::from_unnormalized(weights)
        .map_err(|_| Error::DegenerateConditional(format!("all candidate weights at site ({j}, {i}) are zero")))
}

/// Log of a Dirichlet-multinomial marginal for one count row under a
/// symmetric prior: `ln Gamma(K c) - ln Gamma(K c + total) +
/// sum_k [ln Gamma(c + n_k) - ln Gamma(c)]`.
fn dirichlet_multinomial_ln(counts: &[u64], conc: f64) -> f64 {
    let k = counts.len() as f64;
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let mut acc = ln_gamma(k * conc) - ln_gamma(k * conc + total as f64);
    for &n in counts {
        if n > 0 {
            acc += ln_gamma(conc + n as f64) - ln_gamma(conc);
        }
    }
    acc
}

/// `log \int P(phi) prod_j P(p^j, w | phi) dphi` in closed form: one
/// Dirichlet-multinomial term for the initial distribution, one per
/// transition row and one per emission row, over cross-path counts.
pub fn hmm_log_joint_collapsed(
    pathset: &HmmPathSet,
    w: &ObservationSequence,
    priors: &HmmPriors,
) -> Result<f64> {
    priors.validate()?;
    let counts = HmmCounts::from_paths(pathset, w)?;
    let s = counts.n_states();
    let mut total = dirichlet_multinomial_ln(counts.init(), priors.init_conc);
    for a in 0..s {
        total += dirichlet_multinomial_ln(counts.trans_counts_of(a), priors.trans_conc);
        total += dirichlet_multinomial_ln(counts.emit_counts_of(a), priors.emit_conc);
    }
    Ok(total)
}

fn init_paths(
    n: usize,
    n_states: usize,
    m: usize,
    seed: u64,
    run_index: u32,
) -> Result<HmmPathSet> {
    let paths: Vec<Vec<u32>> = (0..m)
        .map(|j| {
            let mut rng = RngStream::new(seed, StreamId::new(run_index, j as u32, Phase::Init));
            (0..n).map(|_| rng.next_index(n_states) as u32).collect()
        })
        .collect();
    HmmPathSet::new(paths, n_states)
}

fn sweep_rngs(m: usize, seed: u64, run_index: u32) -> Vec<RngStream> {
    (0..m)
        .map(|j| RngStream::new(seed, StreamId::new(run_index, j as u32, Phase::Sweep)))
        .collect()
}

/// Multipath collapsed Gibbs sampler. Sites are resampled against live
/// cross-path counts, paths in outer loop, positions ascending; strictly
/// sequential within a chain.
pub struct CollapsedHmmSampler<'a> {
    obs: &'a ObservationSequence,
    pathset: HmmPathSet,
    counts: HmmCounts,
    priors: HmmPriors,
    rngs: Vec<RngStream>,
    weights: Vec<f64>,
}

impl<'a> CollapsedHmmSampler<'a> {
    pub fn new(
        obs: &'a ObservationSequence,
        n_states: usize,
        m: usize,
        priors: HmmPriors,
        seed: u64,
        run_index: u32,
    ) -> Result<Self> {
        priors.validate()?;
        if n_states == 0 || m == 0 {
            return Err(Error::invalid("need n_states >= 1 and m >= 1"));
        }
        let pathset = init_paths(obs.len(), n_states, m, seed, run_index)?;
        let counts = HmmCounts::from_paths(&pathset, obs)?;
        Ok(CollapsedHmmSampler {
            obs,
            pathset,
            counts,
            priors,
            rngs: sweep_rngs(m, seed, run_index),
            weights: vec![0.0; n_states],
        })
    }

    /// One full pass over every (path, position) site.
    pub fn sweep(&mut self) -> Result<()> {
        let n = self.obs.len();
        let m = self.pathset.m();
        let syms = self.obs.symbols();
        for j in 0..m {
            for i in 0..n {
                let (prev, cur, next) = {
                    let path = self.pathset.path(j);
                    (
                        (i > 0).then(|| path[i - 1]),
                        path[i],
                        (i + 1 < n).then(|| path[i + 1]),
                    )
                };
                let sym = syms[i];
                self.counts.remove_site(prev, cur, next, sym)?;
                collapsed_site_weights(&self.counts, prev, next, sym, &self.priors, &mut self.weights);
                let new = sample_categorical(&self.weights, &mut self.rngs[j])? as u32;
                self.counts.add_site(prev, new, next, sym);
                self.pathset.paths_mut()[j][i] = new;
            }
        }
        Ok(())
    }

    pub fn pathset(&self) -> &HmmPathSet {
        &self.pathset
    }

    pub fn counts(&self) -> &HmmCounts {
        &self.counts
    }

    pub fn posterior_mean_params(&self) -> Result<HmmParams> {
        hmm_posterior_mean_params(&self.counts, &self.priors)
    }

    pub fn into_pathset(self) -> HmmPathSet {
        self.pathset
    }
}

/// Multipath partially collapsed Gibbs sampler: draw the parameters from
/// their conditional given all paths, then resample each path given the
/// parameters. Paths are conditionally independent given the parameters,
/// so their sweeps may run concurrently; per-path counts are merged
/// afterwards, which is bit-identical to the sequential order because each
/// path owns its random stream.
pub struct PcHmmSampler<'a> {
    obs: &'a ObservationSequence,
    pathset: HmmPathSet,
    counts: HmmCounts,
    params: HmmParams,
    priors: HmmPriors,
    param_rng: RngStream,
    rngs: Vec<RngStream>,
    parallel: bool,
}

impl<'a> PcHmmSampler<'a> {
    pub fn new(
        obs: &'a ObservationSequence,
        n_states: usize,
        m: usize,
        priors: HmmPriors,
        seed: u64,
        run_index: u32,
        parallel: bool,
    ) -> Result<Self> {
        priors.validate()?;
        if n_states == 0 || m == 0 {
            return Err(Error::invalid("need n_states >= 1 and m >= 1"));
        }
        let pathset = init_paths(obs.len(), n_states, m, seed, run_index)?;
        let counts = HmmCounts::from_paths(&pathset, obs)?;
        // Point estimate before the first parameter draw.
        let params = hmm_posterior_mean_params(&counts, &priors)?;
        Ok(PcHmmSampler {
            obs,
            pathset,
            counts,
            params,
            priors,
            param_rng: RngStream::new(seed, StreamId::new(run_index, 0, Phase::Params)),
            rngs: sweep_rngs(m, seed, run_index),
            parallel,
        })
    }

    /// One iteration: parameter draw, then a site sweep of every path.
    pub fn iterate(&mut self) -> Result<()> {
        self.params = hmm_sample_params(&self.counts, &self.priors, &mut self.param_rng)?;
        let params = &self.params;
        let obs = self.obs;
        let paths = self.pathset.paths_mut();
        if self.parallel {
            paths
                .par_iter_mut()
                .zip(self.rngs.par_iter_mut())
                .try_for_each(|(path, rng)| pc_sweep_path(params, path, obs, rng))?;
        } else {
            for (path, rng) in paths.iter_mut().zip(self.rngs.iter_mut()) {
                pc_sweep_path(params, path, obs, rng)?;
            }
        }
        self.counts = HmmCounts::from_paths(&self.pathset, self.obs)?;
        Ok(())
    }

    pub fn params(&self) -> &HmmParams {
        &self.params
    }

    pub fn pathset(&self) -> &HmmPathSet {
        &self.pathset
    }

    pub fn counts(&self) -> &HmmCounts {
        &self.counts
    }

    pub fn into_parts(self) -> (HmmParams, HmmPathSet) {
        (self.params, self.pathset)
    }
}

fn pc_sweep_path(
    params: &HmmParams,
    path: &mut [u32],
    obs: &ObservationSequence,
    rng: &mut RngStream,
) -> Result<()> {
    let s = params.n_states();
    let n = path.len();
    let syms = obs.symbols();
    let mut weights = vec![0.0; s];
    for i in 0..n {
        let sym = syms[i] as usize;
        for (t, slot) in weights.iter_mut().enumerate() {
            let left = if i == 0 {
                params.initial()[t]
            } else {
                params.transition(path[i - 1] as usize)[t]
            };
            let right = if i + 1 < n {
                params.transition(t)[path[i + 1] as usize]
            } else {
                1.0
            };
            *slot = left * right * params.emission(t)[sym];
        }
        path[i] = sample_categorical(&weights, rng)? as u32;
    }
    Ok(())
}

/// Configuration of one HMM sampler run.
#[derive(Clone, Debug)]
pub struct HmmRunConfig {
    pub variant: SamplerVariant,
    pub n_states: usize,
    pub m: usize,
    pub iterations: usize,
    /// Measure the data log-likelihood every this many iterations.
    pub cadence: usize,
    pub seed: u64,
    pub run_index: u32,
    pub priors: HmmPriors,
    pub parallel_paths: bool,
}

impl HmmRunConfig {
    fn validate(&self) -> Result<()> {
        self.priors.validate()?;
        for (name, v) in [
            ("n_states", self.n_states),
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

/// Artifacts of a finished run: the final parameter estimate, the final
/// path set, and the periodic data log-likelihood trace (iteration 0
/// included, so its length is `floor(iterations / cadence) + 1`).
#[derive(Clone, Debug)]
pub struct HmmRun {
    pub params: HmmParams,
    pub pathset: HmmPathSet,
    pub trace: Vec<TracePoint>,
}

/// Execute a sampler run. The traced point estimate is the current
/// parameter draw for the partially collapsed variant and the
/// posterior-mean parameters given the live counts for the collapsed one
/// (and for iteration 0 of both, where no draw exists yet).
pub fn run_hmm_sampler(config: &HmmRunConfig, obs: &ObservationSequence) -> Result<HmmRun> {
    config.validate()?;
    let mut trace = Vec::with_capacity(config.iterations / config.cadence + 1);
    match config.variant {
        SamplerVariant::Collapsed => {
            let mut sampler = CollapsedHmmSampler::new(
                obs,
                config.n_states,
                config.m,
                config.priors,
                config.seed,
                config.run_index,
            )?;
            let measure = |iteration: usize, sampler: &CollapsedHmmSampler| -> Result<TracePoint> {
                let estimate = sampler.posterior_mean_params()?;
                Ok(TracePoint {
                    iteration,
                    value: forward_log_likelihood(&estimate, obs)?,
                })
            };
            trace.push(measure(0, &sampler)?);
            for iteration in 1..=config.iterations {
                sampler.sweep()?;
                if iteration % config.cadence == 0 {
                    trace.push(measure(iteration, &sampler)?);
                }
            }
            let params = sampler.posterior_mean_params()?;
            Ok(HmmRun {
                params,
                pathset: sampler.into_pathset(),
                trace,
            })
        }
        SamplerVariant::PartiallyCollapsed => {
            let mut sampler = PcHmmSampler::new(
                obs,
                config.n_states,
                config.m,
                config.priors,
                config.seed,
                config.run_index,
                config.parallel_paths,
            )?;
            trace.push(TracePoint {
                iteration: 0,
                value: forward_log_likelihood(sampler.params(), obs)?,
            });
            for iteration in 1..=config.iterations {
                sampler.iterate()?;
                if iteration % config.cadence == 0 {
                    trace.push(TracePoint {
                        iteration,
                        value: forward_log_likelihood(sampler.params(), obs)?,
                    });
                }
            }
            let (params, pathset) = sampler.into_parts();
            Ok(HmmRun {
                params,
                pathset,
                trace,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hmm::model::hmm_generate;

    fn obs(symbols: &[u32], w: usize) -> ObservationSequence {
        ObservationSequence::new(symbols.to_vec(), w).unwrap()
    }

    fn gen_rng(seed: u64) -> RngStream {
        RngStream::new(seed, StreamId::new(0, 0, Phase::Generate))
    }

    fn simplex(v: &[f64]) -> SimplexVector {
        SimplexVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn sample_params_with_zero_counts_draws_from_prior() {
        // A single-token path set gives zero transition counts; the
        // transition rows must still be valid prior draws.
        let pathset = HmmPathSet::new(vec![vec![0]], 3).unwrap();
        let w = obs(&[1], 4);
        let counts = HmmCounts::from_paths(&pathset, &w).unwrap();
        let params =
            hmm_sample_params(&counts, &HmmPriors::default(), &mut gen_rng(5)).unwrap();
        assert_eq!(params.n_states(), 3);
        assert_eq!(params.n_symbols(), 4);
    }

    #[test]
    fn sample_params_concentrates_on_empirical_frequencies() {
        // 100k transitions out of state 0 at ratio 0.55 / 0.45.
        let mut path = Vec::with_capacity(100_001);
        let mut rng = gen_rng(6);
        path.push(0u32);
        for _ in 0..100_000 {
            // Alternate to keep state 0 as the source often; simpler: craft
            // counts directly through a long path of 0s with symbols.
            let next = if rng.next_f64() < 0.45 { 1 } else { 0 };
            path.push(next);
            path.push(0);
        }
        path.truncate(100_001);
        let symbols = vec![0u32; path.len()];
        let pathset = HmmPathSet::new(vec![path], 2).unwrap();
        let w = obs(&symbols, 2);
        let counts = HmmCounts::from_paths(&pathset, &w).unwrap();
        let q = counts.trans(0, 1) as f64 / counts.trans_row(0) as f64;
        let params =
            hmm_sample_params(&counts, &HmmPriors::default(), &mut gen_rng(7)).unwrap();
        assert!(
            (params.transition(0)[1] - q).abs() < 0.01,
            "sampled {} empirical {q}",
            params.transition(0)[1]
        );
    }

    #[test]
    fn pc_site_dist_uniform_when_everything_is_uniform() {
        let params = HmmParams::new(
            SimplexVector::uniform(3),
            vec![SimplexVector::uniform(3); 3],
            vec![SimplexVector::uniform(2); 3],
        )
        .unwrap();
        let w = obs(&[0, 1, 0], 2);
        let dist = hmm_pc_site_dist(&params, &[0, 2, 1], 1, &w).unwrap();
        for t in 0..3 {
            assert!((dist[t] - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn pc_site_dist_point_mass_under_identity_emissions() {
        let params = HmmParams::new(
            SimplexVector::uniform(2),
            vec![SimplexVector::uniform(2); 2],
            vec![SimplexVector::point_mass(2, 0), SimplexVector::point_mass(2, 1)],
        )
        .unwrap();
        let w = obs(&[1, 0, 1], 2);
        let dist = hmm_pc_site_dist(&params, &[0, 0, 1], 1, &w).unwrap();
        assert_eq!(dist[0], 1.0);
        assert_eq!(dist[1], 0.0);
    }

    #[test]
    fn pc_site_dist_matches_hand_product_at_interior_site() {
        let params = HmmParams::new(
            simplex(&[0.3, 0.7]),
            vec![simplex(&[0.6, 0.4]), simplex(&[0.1, 0.9])],
            vec![simplex(&[0.2, 0.8]), simplex(&[0.5, 0.5])],
        )
        .unwrap();
        let path = [0u32, 1, 1];
        let w = obs(&[0, 1, 1], 2);
        // Site i=1: prev=0, next=1, symbol 1. Three factors per state.
        let w0 = 0.6 * 0.4 * 0.8;
        let w1 = 0.4 * 0.9 * 0.5;
        let dist = hmm_pc_site_dist(&params, &path, 1, &w).unwrap();
        assert!((dist[0] - w0 / (w0 + w1)).abs() < 1e-12);
        assert!((dist[1] - w1 / (w0 + w1)).abs() < 1e-12);
    }

    #[test]
    fn pc_site_dist_degenerate_weights_error() {
        let params = HmmParams::new(
            simplex(&[1.0, 0.0]),
            vec![simplex(&[1.0, 0.0]), simplex(&[1.0, 0.0])],
            vec![simplex(&[1.0, 0.0]), simplex(&[1.0, 0.0])],
        )
        .unwrap();
        // Symbol 1 has probability zero in every state.
        let w = obs(&[1], 2);
        let err = hmm_pc_site_dist(&params, &[0], 0, &w).unwrap_err();
        assert!(matches!(err, Error::DegenerateConditional(_)));
    }

    #[test]
    fn collapsed_site_dist_uniform_under_symmetric_decremented_counts() {
        // W = 1 makes the emission predictive equal for every state, and
        // resampling the last position of path 0 leaves transition row 0
        // empty, so the conditional is uniform.
        let pathset = HmmPathSet::new(vec![vec![0, 0], vec![1, 1]], 2).unwrap();
        let w = obs(&[0, 0], 1);
        let counts = HmmCounts::from_paths(&pathset, &w).unwrap();
        let dist =
            hmm_collapsed_site_dist(&counts, &pathset, 0, 1, &w, &HmmPriors::default()).unwrap();
        assert!((dist[0] - 0.5).abs() < 1e-12);
        assert!((dist[1] - 0.5).abs() < 1e-12);
    }

    /// Brute-force conditional from the closed-form joint: evaluate the
    /// joint at every candidate value of the site and normalize.
    fn oracle_site_dist(
        pathset: &HmmPathSet,
        j: usize,
        i: usize,
        w: &ObservationSequence,
        priors: &HmmPriors,
    ) -> Vec<f64> {
        let s = pathset.n_states();
        let logs: Vec<f64> = (0..s)
            .map(|t| {
                let mut paths = pathset.paths().to_vec();
                paths[j][i] = t as u32;
                let alt = HmmPathSet::new(paths, s).unwrap();
                hmm_log_joint_collapsed(&alt, w, priors).unwrap()
            })
            .collect();
        let norm = crate::prob::log_sum_exp(&logs).unwrap();
        logs.iter().map(|&l| (l - norm).exp()).collect()
    }

    #[test]
    fn collapsed_site_dist_matches_joint_oracle_m1_and_m2() {
        let priors = HmmPriors {
            init_conc: 0.7,
            trans_conc: 1.3,
            emit_conc: 0.4,
        };
        let w = obs(&[1, 0, 1], 2);
        for paths in [
            vec![vec![0u32, 1, 0]],
            vec![vec![0u32, 1, 0], vec![1, 1, 0]],
        ] {
            let pathset = HmmPathSet::new(paths, 2).unwrap();
            let counts = HmmCounts::from_paths(&pathset, &w).unwrap();
            for j in 0..pathset.m() {
                for i in 0..3 {
                    let got = hmm_collapsed_site_dist(&counts, &pathset, j, i, &w, &priors).unwrap();
                    let want = oracle_site_dist(&pathset, j, i, &w, &priors);
                    for t in 0..2 {
                        assert!(
                            (got[t] - want[t]).abs() < 1e-10,
                            "site ({j},{i}) state {t}: got {} want {}",
                            got[t],
                            want[t]
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn collapsed_site_dist_detects_inconsistent_counts() {
        let pathset = HmmPathSet::new(vec![vec![0, 1]], 2).unwrap();
        let w = obs(&[0, 1], 2);
        let other = HmmPathSet::new(vec![vec![1, 0]], 2).unwrap();
        // Counts built from a different path set: removing the claimed site
        // underflows.
        let counts = HmmCounts::from_paths(&other, &w).unwrap();
        let err = hmm_collapsed_site_dist(&counts, &pathset, 0, 0, &w, &HmmPriors::default())
            .unwrap_err();
        assert!(matches!(err, Error::InternalConsistency(_)));
    }

    #[test]
    fn log_joint_trivial_instance_is_zero() {
        let pathset = HmmPathSet::new(vec![vec![0]], 1).unwrap();
        let w = obs(&[0], 1);
        let got = hmm_log_joint_collapsed(&pathset, &w, &HmmPriors::default()).unwrap();
        assert!(got.abs() < 1e-12);
    }

    #[test]
    fn log_joint_invariant_under_state_relabeling() {
        let priors = HmmPriors::default();
        let w = obs(&[0, 2, 1, 1], 3);
        let pathset = HmmPathSet::new(vec![vec![0, 1, 1, 0], vec![1, 0, 1, 1]], 2).unwrap();
        let swapped = HmmPathSet::new(
            pathset
                .paths()
                .iter()
                .map(|p| p.iter().map(|&s| 1 - s).collect())
                .collect(),
            2,
        )
        .unwrap();
        let a = hmm_log_joint_collapsed(&pathset, &w, &priors).unwrap();
        let b = hmm_log_joint_collapsed(&swapped, &w, &priors).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    /// Midpoint quadrature of `x^(k0) (1-x)^(k1)` against a Dir(conc)
    /// density on the 1-simplex.
    fn simplex_grid_integral(conc: f64, k0: u32, k1: u32, points: usize) -> f64 {
        let mut acc = 0.0;
        let h = 1.0 / points as f64;
        // Dir(c, c) density on x in [0, 1].
        let log_norm = ln_gamma(2.0 * conc) - 2.0 * ln_gamma(conc);
        for idx in 0..points {
            let x = (idx as f64 + 0.5) * h;
            let density =
                (log_norm + (conc - 1.0) * libm::log(x) + (conc - 1.0) * libm::log(1.0 - x)).exp();
            acc += density * x.powi(k0 as i32) * (1.0 - x).powi(k1 as i32) * h;
        }
        acc
    }

    #[test]
    fn log_joint_matches_grid_quadrature() {
        // S=2, N=2, W=2, m=1, uniform priors; path (0, 1), symbols (1, 0).
        // The integral factorizes over the parameter blocks: the initial
        // distribution (state 0 chosen), transition row 0 (0 -> 1), and
        // emissions of state 0 (symbol 1) and state 1 (symbol 0).
        let priors = HmmPriors::default();
        let pathset = HmmPathSet::new(vec![vec![0, 1]], 2).unwrap();
        let w = obs(&[1, 0], 2);
        let got = hmm_log_joint_collapsed(&pathset, &w, &priors).unwrap();

        let points = 200_000;
        let init_factor = simplex_grid_integral(priors.init_conc, 1, 0, points);
        let trans_factor = simplex_grid_integral(priors.trans_conc, 0, 1, points);
        let emit0_factor = simplex_grid_integral(priors.emit_conc, 0, 1, points);
        let emit1_factor = simplex_grid_integral(priors.emit_conc, 1, 0, points);
        let want = (init_factor * trans_factor * emit0_factor * emit1_factor).ln();
        assert!((got - want).abs() < 1e-4, "joint {got} quadrature {want}");
    }

    #[test]
    fn collapsed_sweeps_keep_counts_consistent() {
        let truth = HmmParams::new(
            simplex(&[0.5, 0.5]),
            vec![simplex(&[0.55, 0.45]), simplex(&[0.45, 0.55])],
            vec![simplex(&[0.7, 0.3]), simplex(&[0.4, 0.6])],
        )
        .unwrap();
        let (_, w) = hmm_generate(&truth, 60, &mut gen_rng(8)).unwrap();
        let mut sampler =
            CollapsedHmmSampler::new(&w, 2, 3, HmmPriors::default(), 21, 0).unwrap();
        for _ in 0..25 {
            sampler.sweep().unwrap();
            sampler.counts().verify_against(sampler.pathset(), &w).unwrap();
        }
    }

    #[test]
    fn pc_iterations_keep_counts_consistent() {
        let truth = HmmParams::new(
            simplex(&[0.5, 0.5]),
            vec![simplex(&[0.55, 0.45]), simplex(&[0.45, 0.55])],
            vec![simplex(&[0.7, 0.3]), simplex(&[0.4, 0.6])],
        )
        .unwrap();
        let (_, w) = hmm_generate(&truth, 60, &mut gen_rng(9)).unwrap();
        let mut sampler =
            PcHmmSampler::new(&w, 2, 2, HmmPriors::default(), 22, 0, false).unwrap();
        for _ in 0..25 {
            sampler.iterate().unwrap();
            sampler.counts().verify_against(sampler.pathset(), &w).unwrap();
        }
    }

    #[test]
    fn pc_parallel_merge_is_bit_identical_to_sequential() {
        let truth = HmmParams::new(
            simplex(&[0.5, 0.5]),
            vec![simplex(&[0.6, 0.4]), simplex(&[0.3, 0.7])],
            vec![simplex(&[0.8, 0.2]), simplex(&[0.25, 0.75])],
        )
        .unwrap();
        let (_, w) = hmm_generate(&truth, 80, &mut gen_rng(10)).unwrap();
        let mut seq = PcHmmSampler::new(&w, 2, 4, HmmPriors::default(), 30, 0, false).unwrap();
        let mut par = PcHmmSampler::new(&w, 2, 4, HmmPriors::default(), 30, 0, true).unwrap();
        for _ in 0..10 {
            seq.iterate().unwrap();
            par.iterate().unwrap();
            assert_eq!(seq.pathset(), par.pathset());
            assert_eq!(seq.params(), par.params());
        }
    }

    #[test]
    fn run_trace_has_expected_length() {
        let truth = HmmParams::new(
            simplex(&[0.5, 0.5]),
            vec![simplex(&[0.55, 0.45]), simplex(&[0.45, 0.55])],
            vec![simplex(&[0.7, 0.3]), simplex(&[0.4, 0.6])],
        )
        .unwrap();
        let (_, w) = hmm_generate(&truth, 40, &mut gen_rng(11)).unwrap();
        for variant in [SamplerVariant::Collapsed, SamplerVariant::PartiallyCollapsed] {
            let run = run_hmm_sampler(
                &HmmRunConfig {
                    variant,
                    n_states: 2,
                    m: 2,
                    iterations: 57,
                    cadence: 10,
                    seed: 77,
                    run_index: 0,
                    priors: HmmPriors::default(),
                    parallel_paths: false,
                },
                &w,
            )
            .unwrap();
            assert_eq!(run.trace.len(), 57 / 10 + 1);
            assert_eq!(run.trace[0].iteration, 0);
            assert_eq!(run.trace.last().unwrap().iteration, 50);
        }
    }

    #[test]
    fn run_is_deterministic_given_config() {
        let truth = HmmParams::new(
            simplex(&[0.5, 0.5]),
            vec![simplex(&[0.55, 0.45]), simplex(&[0.45, 0.55])],
            vec![simplex(&[0.7, 0.3]), simplex(&[0.4, 0.6])],
        )
        .unwrap();
        let (_, w) = hmm_generate(&truth, 50, &mut gen_rng(12)).unwrap();
        let config = HmmRunConfig {
            variant: SamplerVariant::Collapsed,
            n_states: 2,
            m: 3,
            iterations: 30,
            cadence: 5,
            seed: 99,
            run_index: 4,
            priors: HmmPriors::default(),
            parallel_paths: false,
        };
        let a = run_hmm_sampler(&config, &w).unwrap();
        let b = run_hmm_sampler(&config, &w).unwrap();
        assert_eq!(a.pathset, b.pathset);
        assert_eq!(a.params, b.params);
        assert_eq!(a.trace, b.trace);
    }
}
