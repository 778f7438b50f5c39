//! Deterministic, seedable probability primitives shared by both sampler
//! engines.

mod math;
mod rng;
mod sampling;
mod simplex;

pub use math::{ln_gamma, log_sum_exp};
pub use rng::{Phase, RngStream, StreamId};
pub use sampling::{sample_categorical, sample_dirichlet, sample_standard_gamma};
pub use simplex::SimplexVector;
