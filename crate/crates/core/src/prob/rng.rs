use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// What a stream is used for. Keeping phases on separate streams means the
/// draw sequence consumed by one part of a sampler never shifts another.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Phase {
    /// Synthetic dataset generation.
    Generate,
    /// Random initialization of latent paths.
    Init,
    /// Parameter draws (the phi step of a partially collapsed sampler).
    Params,
    /// Per-site resampling inside a sweep.
    Sweep,
}

impl Phase {
    fn tag(self) -> u64 {
        match self {
            Phase::Generate => 0,
            Phase::Init => 1,
            Phase::Params => 2,
            Phase::Sweep => 3,
        }
    }
}

/// Identifies one logical stream of randomness: a repetition of an
/// experiment, a path within the run, and the phase the draws feed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct StreamId {
    pub run: u32,
    pub path: u32,
    pub phase: Phase,
}

impl StreamId {
    pub fn new(run: u32, path: u32, phase: Phase) -> Self {
        StreamId { run, path, phase }
    }
}

/// A seedable random stream. Streams with distinct `(seed, StreamId)` keys
/// are independent ChaCha8 instances, so paths can be sampled in any order
/// (or concurrently) without perturbing each other's draws, and the same
/// key reproduces the same sequence on every platform.
#[derive(Clone, Debug)]
pub struct RngStream {
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, id: StreamId) -> Self {
        // The full (seed, run, path, phase) tuple becomes the 256-bit key,
        // so distinct ids can never collide.
        let mut key = [0u8; 32];
        key[0..8].copy_from_slice(&seed.to_le_bytes());
        key[8..16].copy_from_slice(&(id.run as u64).to_le_bytes());
        key[16..24].copy_from_slice(&(id.path as u64).to_le_bytes());
        key[24..32].copy_from_slice(&id.phase.tag().to_le_bytes());
        RngStream {
            inner: ChaCha8Rng::from_seed(key),
        }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform draw in `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in `(0, 1]`; safe to pass through `ln`.
    #[inline]
    pub fn next_f64_pos(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[0, n)` by rejection, bias-free.
    pub fn next_index(&mut self, n: usize) -> usize {
        assert!(n > 0, "next_index requires n > 0");
        let n = n as u64;
        let zone = u64::MAX - (u64::MAX - n + 1) % n;
        loop {
            let x = self.next_u64();
            if x <= zone {
                return (x % n) as usize;
            }
        }
    }

    /// Standard normal via Box-Muller (two uniforms per draw).
    pub fn next_standard_normal(&mut self) -> f64 {
        let u1 = self.next_f64_pos();
        let u2 = self.next_f64();
        let r = libm::sqrt(-2.0 * libm::log(u1));
        r * libm::cos(2.0 * std::f64::consts::PI * u2)
    }
}
