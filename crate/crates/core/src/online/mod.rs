//! Smoothed online learning: Hedge over a γ-cover, learners, adversaries, the
//! game loop with exact regret, and the maximal-deviation Monte Carlo.

mod adversary;
mod deviation;
mod hedge;
mod learner;
mod play;

pub use adversary::{
    capped_region_dist, make_adversary, Adversary, AdversaryKind, BinarySearch, Emission, Nonadaptive, StickyQuarter,
    UncertaintyRegion,
};
pub use deviation::{deviation_bound, disjoint_slabs, max_deviation_monte_carlo, DeviationStats, DeviationStrategy};
pub use hedge::{hedge_update, HedgeState};
pub use learner::{coordinate_ranks, Experts, FixedLearner, HalvingLearner, HedgeLearner, OnlineLearner};
pub use play::{
    cover_radius, play_game, smooth_online_play, threshold_hindsight, PlayOptions, RegretRecord, RoundRecord,
    COMPARATOR_LIMIT, REGRET_CSV_HEADER,
};
