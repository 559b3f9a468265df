//! Differentially private query release: Laplace and exponential primitives,
//! MWEM and its smooth variants, the KL projection onto the σ-smooth
//! polytope, and the subsampled net mechanism.

mod grid_oracle;
mod mwem;
mod primitives;
mod projection;
mod smalldb;

pub use grid_oracle::{kl_objective, kl_projection_grid_search};
pub use mwem::{
    answers, capped_sample, max_query_error, mwem, projected_smooth_mwem, smooth_dataset, smooth_mwem, BudgetEntry,
    BudgetStep, MechanismTranscript, RoundTranscript, SmoothMwemOptions, SmoothRelease,
};
pub use primitives::{
    advanced_composition, exponential_mechanism, exponential_probabilities, laplace_sample, multiplicative_update,
    select, PrivacyParams,
};
pub use projection::{kl_project_capped_simplex, water_fill, SmoothPolytope};
pub use smalldb::{
    default_net_size, enumerate_multisets, max_probability_ratio, multiset_count, net_output_distribution, net_scores,
    subsampled_net_mechanism, ENUMERATION_LIMIT,
};
