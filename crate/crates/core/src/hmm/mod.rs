//! Discrete-emission HMM: generative model, exact forward likelihood,
//! Baum-Welch baseline, and the multipath Gibbs samplers (partially
//! collapsed and collapsed).

mod baum_welch;
mod counts;
mod gibbs;
mod model;

pub use baum_welch::baum_welch;
pub use counts::HmmCounts;
pub use gibbs::{
    hmm_collapsed_site_dist, hmm_log_joint_collapsed, hmm_pc_site_dist, hmm_posterior_mean_params,
    hmm_sample_params, run_hmm_sampler, CollapsedHmmSampler, HmmRun, HmmRunConfig, PcHmmSampler,
};
pub use model::{
    brute_force_log_likelihood, forward_log_likelihood, hmm_generate, path_log_likelihood,
    HmmParams, HmmPathSet, HmmPriors, ObservationSequence,
};
