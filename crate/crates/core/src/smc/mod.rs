//! Sequential Monte Carlo: weights, resampling, the bootstrap and
//! perturbed-parameter filters, and the score estimator built on them.

pub mod filter;
pub mod resample;
pub mod score;
pub mod weights;

pub use filter::{
    bootstrap_filter, bootstrap_filter_with, perturbed_filter, perturbed_filter_with, swarm_filter,
    FilterOptions, FilterOutput, PerturbSpec,
};
pub use resample::{systematic_indices, systematic_resample, systematic_resample_with_offset};
pub use score::{estimate_score, ScoreMode};
pub use weights::{effective_sample_size, normalize_logweights, pairwise_sum, Normalized};
