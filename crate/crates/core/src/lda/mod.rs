//! LDA: generative model and the multipath partially collapsed / fully
//! collapsed Gibbs samplers with cross-path topic-word counters.

mod corpus;
mod counters;
mod gibbs;

pub use corpus::{Corpus, LdaPathSet, LdaPriors, TopicMatrix};
pub use counters::LdaCounters;
pub use gibbs::{
    lda_collapsed_site_weights, lda_generate, lda_log_joint_collapsed, lda_path_log_likelihood,
    lda_pc_site_weights, lda_posterior_mean_topics, lda_sample_topics, run_lda_sampler, theta_doc,
    CollapsedLdaSampler, LdaRun, LdaRunConfig, PcLdaSampler,
};
