//! γ-covers built from a uniform sample and the labeling tree.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits::BitSet;
use crate::domain::{Dist, Domain};
use crate::error::{Error, Result};
use crate::hypothesis::{realized_witnesses, Hypothesis, HypothesisClass};

/// Sample-size constant `c` in `m = ⌈c · vc · ln(1/γ) / γ²⌉`.
pub const DEFAULT_SAMPLE_CONSTANT: f64 = 8.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cover {
    members: Vec<Hypothesis>,
    gamma: f64,
    class_id: String,
    sample_size: usize,
    distinct_points: usize,
    saturated: bool,
}

impl Cover {
    /// A cover listed explicitly, e.g. an evenly spaced threshold grid.
    pub fn from_members(members: Vec<Hypothesis>, gamma: f64, class_id: impl Into<String>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::Empty("cover members"));
        }
        Ok(Self {
            members,
            gamma,
            class_id: class_id.into(),
            sample_size: 0,
            distinct_points: 0,
            saturated: false,
        })
    }

    pub fn members(&self) -> &[Hypothesis] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn class_id(&self) -> &str {
        &self.class_id
    }

    /// Number of sample draws requested.
    pub fn sample_size(&self) -> usize {
        self.sample_size
    }

    /// Distinct atoms among the draws actually made.
    pub fn distinct_points(&self) -> usize {
        self.distinct_points
    }

    /// Whether sampling stopped early because every atom had been drawn, in
    /// which case the cover is exact (radius 0).
    pub fn saturated(&self) -> bool {
        self.saturated
    }

    pub fn materialize(&self, domain: &Domain) -> Result<Vec<BitSet>> {
        self.members.iter().map(|h| h.materialize(domain)).collect()
    }
}

/// `⌈c · vc · ln(1/γ) / γ²⌉` with `c = 8`.
pub fn default_sample_size(vc_dim: usize, gamma: f64) -> Result<usize> {
    check_gamma(gamma)?;
    let m = DEFAULT_SAMPLE_CONSTANT * vc_dim.max(1) as f64 * (1.0 / gamma).ln() / (gamma * gamma);
    Ok(m.ceil().max(1.0).min(usize::MAX as f64) as usize)
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::param("gamma", format!("must lie in (0, 1), got {gamma}")));
    }
    Ok(())
}

/// Draws `m` atoms uniformly with replacement and keeps one consistent member
/// per realized labeling of the distinct draws. Drawing stops early once every
/// atom has appeared.
pub fn build_cover<R: Rng + ?Sized>(
    class: &HypothesisClass,
    domain: &Domain,
    gamma: f64,
    m: usize,
    rng: &mut R,
) -> Result<Cover> {
    check_gamma(gamma)?;
    if m == 0 {
        return Err(Error::param("m", "need at least one sample point"));
    }
    let n = domain.len();
    let mut seen = vec![false; n];
    let mut distinct = 0usize;
    for _ in 0..m {
        let a = rng.gen_range(0..n);
        if !seen[a] {
            seen[a] = true;
            distinct += 1;
            if distinct == n {
                break;
            }
        }
    }
    let atoms: Vec<usize> = (0..n).filter(|&a| seen[a]).collect();
    let members = realized_witnesses(class, domain, &atoms)?;
    assert!(
        !members.is_empty(),
        "pruning never removes every labeling of a nonempty class"
    );
    Ok(Cover {
        members,
        gamma,
        class_id: class.id(),
        sample_size: m,
        distinct_points: distinct,
        saturated: distinct == n,
    })
}

/// `Σ_{i ≤ vc} C(m, i)`, saturating.
pub fn sauer_shelah_bound(m: usize, vc_dim: usize) -> u128 {
    let mut total: u128 = 0;
    for i in 0..=vc_dim.min(m) {
        total = total.saturating_add(crate::hypothesis::binomial(m, i));
    }
    total
}

/// Exact `Pr_{x∼mu}[h(x) ≠ member(x)]` minimized over members; ties go to
/// the lowest index.
pub fn nearest_in_cover(h: &Hypothesis, cover: &Cover, mu: &Dist) -> Result<(usize, f64)> {
    let target = h.materialize(mu.domain())?;
    let members = cover.materialize(mu.domain())?;
    nearest_in_bits(&target, &members, mu)
}

/// [`nearest_in_cover`] on materialized members.
pub fn nearest_in_bits(target: &BitSet, members: &[BitSet], mu: &Dist) -> Result<(usize, f64)> {
    if members.is_empty() {
        return Err(Error::Empty("cover members"));
    }
    let mut best = (0, f64::INFINITY);
    for (i, m) in members.iter().enumerate() {
        let d = target.xor(m)?.weighted_count(mu.weights());
        if d < best.1 {
            best = (i, d);
        }
    }
    Ok(best)
}
