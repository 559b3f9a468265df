//! Named replication suites, each pinned to one criterion check.

use super::criteria::{
    bracketing, mwem_bound, non_concentration, privacy_ratio, projection_oracle, regret_sublinear, Verdict,
};
use crate::error::{Error, Result};

/// Seed used by the suites and the acceptance target unless overridden.
pub const DEFAULT_BASE_SEED: u64 = 20261016;

pub const SUITES: [&str; 6] = [
    "appendixB",
    "regret-sublinear",
    "mwem-bound",
    "projection-oracle",
    "privacy-ratio",
    "bracket-verify",
];

pub fn replicate_suite(name: &str, base_seed: u64) -> Result<Verdict> {
    match name {
        "appendixB" => non_concentration(base_seed),
        "regret-sublinear" => regret_sublinear(base_seed),
        "mwem-bound" => mwem_bound(base_seed),
        "projection-oracle" => projection_oracle(base_seed),
        "privacy-ratio" => privacy_ratio(),
        "bracket-verify" => bracketing(),
        other => Err(Error::param(
            "suite",
            format!("unknown suite `{other}`, expected one of {}", SUITES.join(", ")),
        )),
    }
}
