use crate::error::{Error, Result};
use crate::hmm::model::{HmmPathSet, ObservationSequence};

/// Sufficient statistics of a path set: first-state counts, transition
/// counts and emission counts, each summed over all `m` paths. Row totals
/// are carried alongside so predictive denominators are O(1).
#[derive(Clone, Debug, PartialEq)]
pub struct HmmCounts {
    s: usize,
    w: usize,
    m: usize,
    n: usize,
    init: Vec<u64>,
    trans: Vec<u64>,     // s * s, row-major
    emit: Vec<u64>,      // s * w, row-major
    trans_row: Vec<u64>, // outgoing-transition totals per state
    emit_row: Vec<u64>,  // emission totals per state (state occupancy)
}

impl HmmCounts {
    pub fn from_paths(pathset: &HmmPathSet, obs: &ObservationSequence) -> Result<Self> {
        if pathset.len() != obs.len() {
            return Err(Error::invalid(format!(
                "paths have length {}, observations {}",
                pathset.len(),
                obs.len()
            )));
        }
        let s = pathset.n_states();
        let w = obs.n_symbols();
        let mut counts = HmmCounts {
            s,
            w,
            m: pathset.m(),
            n: pathset.len(),
            init: vec![0; s],
            trans: vec![0; s * s],
            emit: vec![0; s * w],
            trans_row: vec![0; s],
            emit_row: vec![0; s],
        };
        for path in pathset.paths() {
            counts.init[path[0] as usize] += 1;
            for pair in path.windows(2) {
                let (a, b) = (pair[0] as usize, pair[1] as usize);
                counts.trans[a * s + b] += 1;
                counts.trans_row[a] += 1;
            }
            for (&state, &sym) in path.iter().zip(obs.symbols()) {
                counts.emit[state as usize * w + sym as usize] += 1;
                counts.emit_row[state as usize] += 1;
            }
        }
        Ok(counts)
    }

    pub fn n_states(&self) -> usize {
        self.s
    }

    pub fn n_symbols(&self) -> usize {
        self.w
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn seq_len(&self) -> usize {
        self.n
    }

    pub fn init(&self) -> &[u64] {
        &self.init
    }

    #[inline]
    pub fn trans(&self, from: usize, to: usize) -> u64 {
        self.trans[from * self.s + to]
    }

    pub fn trans_row(&self, from: usize) -> u64 {
        self.trans_row[from]
    }

    #[inline]
    pub fn emit(&self, state: usize, sym: usize) -> u64 {
        self.emit[state * self.w + sym]
    }

    pub fn emit_row(&self, state: usize) -> u64 {
        self.emit_row[state]
    }

    /// Transition counts of one source state.
    pub fn trans_counts_of(&self, from: usize) -> &[u64] {
        &self.trans[from * self.s..(from + 1) * self.s]
    }

    /// Emission counts of one state.
    pub fn emit_counts_of(&self, state: usize) -> &[u64] {
        &self.emit[state * self.w..(state + 1) * self.w]
    }

    /// Remove the contributions of one site: its initial-or-incoming
    /// transition, outgoing transition (if any) and emission.
    ///
    /// `prev`/`next` are the neighboring states on the same path, absent at
    /// the sequence boundaries. Fails with an internal-consistency error if
    /// any touched count is already zero.
    pub fn remove_site(
        &mut self,
        prev: Option<u32>,
        cur: u32,
        next: Option<u32>,
        sym: u32,
    ) -> Result<()> {
        let cur = cur as usize;
        let sym = sym as usize;
        match prev {
            None => {
                Self::dec(&mut self.init[cur])?;
            }
            Some(a) => {
                let a = a as usize;
                Self::dec(&mut self.trans[a * self.s + cur])?;
                Self::dec(&mut self.trans_row[a])?;
            }
        }
        if let Some(b) = next {
            let b = b as usize;
            Self::dec(&mut self.trans[cur * self.s + b])?;
            Self::dec(&mut self.trans_row[cur])?;
        }
        Self::dec(&mut self.emit[cur * self.w + sym])?;
        Self::dec(&mut self.emit_row[cur])?;
        Ok(())
    }

    /// Inverse of [`HmmCounts::remove_site`].
    pub fn add_site(&mut self, prev: Option<u32>, cur: u32, next: Option<u32>, sym: u32) {
        let cur = cur as usize;
        let sym = sym as usize;
        match prev {
            None => self.init[cur] += 1,
            Some(a) => {
                let a = a as usize;
                self.trans[a * self.s + cur] += 1;
                self.trans_row[a] += 1;
            }
        }
        if let Some(b) = next {
            let b = b as usize;
            self.trans[cur * self.s + b] += 1;
            self.trans_row[cur] += 1;
        }
        self.emit[cur * self.w + sym] += 1;
        self.emit_row[cur] += 1;
    }

    fn dec(slot: &mut u64) -> Result<()> {
        *slot = slot.checked_sub(1).ok_or_else(|| {
            Error::InternalConsistency("counter underflow: counts do not match the path set".into())
        })?;
        Ok(())
    }

    /// Full rebuild-and-compare against the path set.
    pub fn verify_against(&self, pathset: &HmmPathSet, obs: &ObservationSequence) -> Result<()> {
        let fresh = HmmCounts::from_paths(pathset, obs)?;
        if *self != fresh {
            return Err(Error::InternalConsistency(
                "incremental counts diverge from a fresh rebuild".into(),
            ));
        }
        Ok(())
    }
}
