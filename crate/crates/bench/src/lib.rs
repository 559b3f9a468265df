//! Fixtures shared by the kernel benchmarks.

use std::sync::Arc;

use smoothlearn::hypothesis::evenly_spaced_thresholds;
use smoothlearn::{BitSet, Dist, Domain, Result};

pub fn grid(n: usize) -> Arc<Domain> {
    Arc::new(Domain::unit_grid(n).expect("n ≥ 1"))
}

/// `count` threshold queries spread over the grid.
pub fn threshold_queries(d: &Arc<Domain>, count: usize) -> Result<Vec<BitSet>> {
    evenly_spaced_thresholds(d, count)?
        .iter()
        .map(|h| h.materialize(d))
        .collect()
}

/// Geometrically decaying weights, far from any smooth polytope.
pub fn skewed(d: &Arc<Domain>) -> Result<Dist> {
    let n = d.len();
    let w = (0..n).map(|i| 0.5f64.powf(8.0 * i as f64 / n as f64)).collect();
    Dist::from_unnormalized(d.clone(), w)
}
