//! Smoothed online learning and smooth private query release on finite
//! domains.
//!
//! A [`Domain`] is a finite list of points. Distributions are weight
//! vectors over it and queries are bitsets. A distribution is σ-smooth when
//! no atom carries more than `1/(σN)` mass.
//!
//! - [`online`] plays Hedge over an empirical cover of a hypothesis class
//!   against smooth adaptive adversaries and records regret.
//! - [`dp`] has MWEM, the smooth and projected smooth variants that run over
//!   a cover instead of the full class, and the subsampled net mechanism.
//! - [`cover`] and [`bracket`] build the finite approximations both sides
//!   rely on.
//! - [`harness`] turns configs into seeded, reproducible CSV runs.
//!
//! ```
//! use std::sync::Arc;
//! use smoothlearn::{Dist, Domain, SmoothnessParam, is_sigma_smooth};
//!
//! let d = Arc::new(Domain::unit_grid(8).unwrap());
//! let half = Dist::uniform_on(d, &[0, 1, 2, 3]).unwrap();
//! assert!(is_sigma_smooth(&half, SmoothnessParam::new(0.5).unwrap()));
//! assert!(!is_sigma_smooth(&half, SmoothnessParam::new(0.6).unwrap()));
//! ```

// `!(x > 0.0)` is how parameter checks reject NaN along with the rest.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bits;
pub mod bracket;
pub mod certify;
pub mod cover;
pub mod domain;
pub mod dp;
pub mod error;
pub mod harness;
pub mod hypothesis;
pub mod online;
pub mod rng;

pub use bits::BitSet;
pub use bracket::{bracket_thresholds, compose_brackets, verify_bracketing, Bracket, Bracketing};
pub use certify::{certify_pseudo_smooth, PseudoSmoothCertificate};
pub use cover::{build_cover, Cover};
pub use domain::{is_sigma_smooth, query_value, Dataset, Dist, Domain, SmoothnessParam};
pub use error::{Error, Result};
pub use hypothesis::{Hypothesis, HypothesisClass};
pub use rng::stream;
