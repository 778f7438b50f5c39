use crate::error::{Error, Result};
use crate::prob::{log_sum_exp, sample_categorical, RngStream, SimplexVector};

/// Parameters of a discrete-emission HMM: the initial distribution over `S`
/// states, one transition row per state, and one emission row per state
/// over a `W`-symbol alphabet.
#[derive(Clone, Debug, PartialEq)]
pub struct HmmParams {
    initial: SimplexVector,
    transitions: Vec<SimplexVector>,
    emissions: Vec<SimplexVector>,
}

impl HmmParams {
    pub fn new(
        initial: SimplexVector,
        transitions: Vec<SimplexVector>,
        emissions: Vec<SimplexVector>,
    ) -> Result<Self> {
        let s = initial.len();
        if transitions.len() != s || emissions.len() != s {
            return Err(Error::invalid(format!(
                "expected {s} transition and emission rows, got {} and {}",
                transitions.len(),
                emissions.len()
            )));
        }
        if transitions.iter().any(|row| row.len() != s) {
            return Err(Error::invalid("transition rows must be S x S"));
        }
        let w = emissions[0].len();
        if emissions.iter().any(|row| row.len() != w) {
            return Err(Error::invalid("emission rows must share one alphabet"));
        }
        Ok(HmmParams {
            initial,
            transitions,
            emissions,
        })
    }

    pub fn n_states(&self) -> usize {
        self.initial.len()
    }

    pub fn n_symbols(&self) -> usize {
        self.emissions[0].len()
    }

    pub fn initial(&self) -> &SimplexVector {
        &self.initial
    }

    pub fn transition(&self, from: usize) -> &SimplexVector {
        &self.transitions[from]
    }

    pub fn emission(&self, state: usize) -> &SimplexVector {
        &self.emissions[state]
    }
}

/// An observed symbol sequence over the alphabet `0..n_symbols`.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservationSequence {
    symbols: Vec<u32>,
    n_symbols: usize,
}

impl ObservationSequence {
    pub fn new(symbols: Vec<u32>, n_symbols: usize) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::invalid("observation sequence must be non-empty"));
        }
        if let Some((i, &sym)) = symbols
            .iter()
            .enumerate()
            .find(|(_, &sym)| sym as usize >= n_symbols)
        {
            return Err(Error::invalid(format!(
                "symbol {sym} at position {i} is outside the alphabet 0..{n_symbols}"
            )));
        }
        Ok(ObservationSequence { symbols, n_symbols })
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn symbols(&self) -> &[u32] {
        &self.symbols
    }

    pub fn n_symbols(&self) -> usize {
        self.n_symbols
    }
}

/// `m` latent state sequences of equal length over the states
/// `0..n_states`.
#[derive(Clone, Debug, PartialEq)]
pub struct HmmPathSet {
    paths: Vec<Vec<u32>>,
    n_states: usize,
}

impl HmmPathSet {
    pub fn new(paths: Vec<Vec<u32>>, n_states: usize) -> Result<Self> {
        if paths.is_empty() {
            return Err(Error::invalid("path set needs at least one path"));
        }
        let n = paths[0].len();
        if n == 0 {
            return Err(Error::invalid("paths must be non-empty"));
        }
        for (j, p) in paths.iter().enumerate() {
            if p.len() != n {
                return Err(Error::invalid(format!(
                    "path {j} has length {}, expected {n}",
                    p.len()
                )));
            }
            if p.iter().any(|&s| s as usize >= n_states) {
                return Err(Error::invalid(format!(
                    "path {j} contains a state outside 0..{n_states}"
                )));
            }
        }
        Ok(HmmPathSet { paths, n_states })
    }

    pub fn m(&self) -> usize {
        self.paths.len()
    }

    /// Length of each path.
    pub fn len(&self) -> usize {
        self.paths[0].len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn paths(&self) -> &[Vec<u32>] {
        &self.paths
    }

    pub fn path(&self, j: usize) -> &[u32] {
        &self.paths[j]
    }

    pub(crate) fn paths_mut(&mut self) -> &mut [Vec<u32>] {
        &mut self.paths
    }
}

/// Symmetric Dirichlet concentrations for the initial, transition and
/// emission distributions. The uniform prior has every concentration at 1.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct HmmPriors {
    pub init_conc: f64,
    pub trans_conc: f64,
    pub emit_conc: f64,
}

impl Default for HmmPriors {
    fn default() -> Self {
        HmmPriors {
            init_conc: 1.0,
            trans_conc: 1.0,
            emit_conc: 1.0,
        }
    }
}

impl HmmPriors {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("init_conc", self.init_conc),
            ("trans_conc", self.trans_conc),
            ("emit_conc", self.emit_conc),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Sample a state sequence from the chain and its emissions.
pub fn hmm_generate(
    params: &HmmParams,
    n: usize,
    rng: &mut RngStream,
) -> Result<(Vec<u32>, ObservationSequence)> {
    if n == 0 {
        return Err(Error::invalid("cannot generate an empty sequence"));
    }
    let mut states = Vec::with_capacity(n);
    let mut symbols = Vec::with_capacity(n);
    let mut state = sample_categorical(params.initial.weights(), rng)?;
    for i in 0..n {
        if i > 0 {
            state = sample_categorical(params.transitions[state].weights(), rng)?;
        }
        states.push(state as u32);
        symbols.push(sample_categorical(params.emissions[state].weights(), rng)? as u32);
    }
    let obs = ObservationSequence::new(symbols, params.n_symbols())?;
    Ok((states, obs))
}

fn check_dims(params: &HmmParams, w: &ObservationSequence) -> Result<()> {
    if params.n_symbols() != w.n_symbols() {
        return Err(Error::invalid(format!(
            "alphabet mismatch: params have {} symbols, observations {}",
            params.n_symbols(),
            w.n_symbols()
        )));
    }
    Ok(())
}

/// `log P(w | params)`, marginalizing over all state paths by the forward
/// recursion in log space.
pub fn forward_log_likelihood(params: &HmmParams, w: &ObservationSequence) -> Result<f64> {
    check_dims(params, w)?;
    let s = params.n_states();
    let log_trans: Vec<Vec<f64>> = (0..s)
        .map(|a| params.transitions[a].weights().iter().map(|&p| libm::log(p)).collect())
        .collect();
    let log_emit: Vec<Vec<f64>> = (0..s)
        .map(|a| params.emissions[a].weights().iter().map(|&p| libm::log(p)).collect())
        .collect();

    let mut alpha: Vec<f64> = (0..s)
        .map(|t| libm::log(params.initial[t]) + log_emit[t][w.symbols()[0] as usize])
        .collect();
    let mut next = vec![0.0; s];
    let mut scratch = vec![0.0; s];
    for &sym in &w.symbols()[1..] {
        for t in 0..s {
            for (a, alpha_a) in alpha.iter().enumerate() {
                scratch[a] = alpha_a + log_trans[a][t];
            }
            next[t] = log_sum_exp(&scratch)? + log_emit[t][sym as usize];
        }
        std::mem::swap(&mut alpha, &mut next);
    }
    log_sum_exp(&alpha)
}

/// `log P(w, path | params)`: initial, transition and emission terms of one
/// fixed state path. Zero-probability steps give `-inf`.
pub fn path_log_likelihood(
    params: &HmmParams,
    path: &[u32],
    w: &ObservationSequence,
) -> Result<f64> {
    check_dims(params, w)?;
    if path.len() != w.len() {
        return Err(Error::invalid(format!(
            "path length {} does not match observation length {}",
            path.len(),
            w.len()
        )));
    }
    let s = params.n_states();
    if path.iter().any(|&st| st as usize >= s) {
        return Err(Error::invalid(format!("path state outside 0..{s}")));
    }
    let mut ll = libm::log(params.initial[path[0] as usize]);
    for i in 0..path.len() {
        if i > 0 {
            ll += libm::log(params.transitions[path[i - 1] as usize][path[i] as usize]);
        }
        ll += libm::log(params.emissions[path[i] as usize][w.symbols()[i] as usize]);
    }
    Ok(ll)
}

/// Enumerate all `S^N` paths; test oracle for the forward recursion.
/// Only sensible at tiny sizes.
pub fn brute_force_log_likelihood(params: &HmmParams, w: &ObservationSequence) -> Result<f64> {
    let s = params.n_states();
    let n = w.len();
    let total = (s as u64)
        .checked_pow(n as u32)
        .ok_or_else(|| Error::invalid("instance too large to enumerate"))?;
    let mut lls = Vec::with_capacity(total as usize);
    let mut path = vec![0u32; n];
    for code in 0..total {
        let mut c = code;
        for slot in path.iter_mut() {
            *slot = (c % s as u64) as u32;
            c /= s as u64;
        }
        lls.push(path_log_likelihood(params, &path, w)?);
    }
    log_sum_exp(&lls)
}
