//! Multipath Gibbs samplers for discrete-emission HMMs and LDA.
//!
//! The samplers in this crate maintain `m` coupled latent-assignment paths
//! that share a single parameter draw, so the stationary distribution of the
//! parameters is proportional to `P(phi) * P(w | phi)^m`. Raising the data
//! likelihood to the m-th power concentrates the chain on high-likelihood
//! solutions without running into the label-switching problem that blocks
//! averaging independent samplers.
//!
//! Both model families come in two variants:
//!
//! * partially collapsed: alternate an explicit parameter draw with per-site
//!   resampling given the parameters (paths are conditionally independent,
//!   so their sweeps can run concurrently);
//! * collapsed: integrate the parameters out analytically and resample sites
//!   from count-based predictive distributions.
//!
//! [`hmm`] additionally carries an exact forward-recursion likelihood and a
//! Baum-Welch baseline so sampler output can be scored exactly; [`metrics`]
//! implements topic-reconstruction distance and the time-concentration
//! statistics (yearly entropies, quantile-bucket histograms); [`synth`] and
//! [`io`] provide the synthetic benchmark generators and on-disk formats.

pub mod error;
pub mod hmm;
pub mod io;
pub mod lda;
pub mod metrics;
pub mod prob;
pub mod run;
pub mod synth;

pub use error::{Error, Result};
pub use run::{SamplerVariant, TracePoint};
