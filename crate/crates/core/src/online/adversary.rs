use std::sync::Arc;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::learner::{coordinate_ranks, OnlineLearner};
use crate::domain::{Dist, Domain, SmoothnessParam};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AdversaryKind {
    Nonadaptive,
    StickyQuarter,
    UncertaintyRegion,
    BinarySearch,
}

impl AdversaryKind {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "nonadaptive" => Self::Nonadaptive,
            "appendixB" | "appendix_b" | "sticky_quarter" => Self::StickyQuarter,
            "uncertainty" | "uncertainty_region" => Self::UncertaintyRegion,
            "binary_search" | "worst_case_binary_search" => Self::BinarySearch,
            other => return Err(Error::Parse(format!("unknown adversary `{other}`"))),
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Nonadaptive => "nonadaptive",
            Self::StickyQuarter => "appendixB",
            Self::UncertaintyRegion => "uncertainty",
            Self::BinarySearch => "binary_search",
        }
    }
}

/// One round's choice: a distribution over instances and the label of every
/// instance. The realized example is `(x, labels[x])` with `x ∼ marginal`.
#[derive(Debug, Clone, PartialEq)]
pub struct Emission {
    pub marginal: Dist,
    pub labels: Vec<i8>,
}

pub trait Adversary {
    fn kind(&self) -> AdversaryKind;

    /// The smoothness every emission must satisfy; `None` for unconstrained
    /// adversaries.
    fn sigma(&self) -> Option<SmoothnessParam>;

    /// Chooses round `t` (0-based) after seeing the learner's state.
    fn emit(&mut self, t: usize, learner: &dyn OnlineLearner, rng: &mut dyn RngCore) -> Result<Emission>;

    /// Realized instance, label and the member the learner played.
    fn observe(&mut self, x: usize, y: i8, played: usize);

    /// Free-form remark carried into the record.
    fn note(&self) -> Option<String> {
        None
    }
}

fn labels_from_cut(rank: &[usize], cut: usize) -> Vec<i8> {
    rank.iter().map(|&r| if r >= cut { 1 } else { -1 }).collect()
}

/// A fixed distribution with fixed labels.
#[derive(Debug, Clone)]
pub struct Nonadaptive {
    emission: Emission,
    sigma: Option<SmoothnessParam>,
}

impl Nonadaptive {
    pub fn new(marginal: Dist, labels: Vec<i8>, sigma: Option<SmoothnessParam>) -> Result<Self> {
        if labels.len() != marginal.len() {
            return Err(Error::LengthMismatch {
                expected: marginal.len(),
                actual: labels.len(),
            });
        }
        Ok(Self {
            emission: Emission { marginal, labels },
            sigma,
        })
    }

    /// Uniform on a window of `⌈σN⌉` consecutive atoms around a random target
    /// cut, labeled by that threshold.
    pub fn realizable_threshold(domain: Arc<Domain>, sigma: SmoothnessParam, rng: &mut dyn RngCore) -> Result<Self> {
        let rank = coordinate_ranks(&domain)?;
        let groups = rank.iter().max().map_or(0, |m| m + 1);
        let cut = rng.gen_range(0..=groups);
        let width = ((sigma.value() * domain.len() as f64).ceil() as usize).clamp(1, domain.len());
        let order = domain.order_by_axis(0)?;
        let pos = order.iter().position(|&a| rank[a] >= cut).unwrap_or(order.len());
        let start = pos.saturating_sub(width / 2).min(order.len() - width);
        let marginal = Dist::uniform_on(Arc::clone(&domain), &order[start..start + width])?;
        Self::new(marginal, labels_from_cut(&rank, cut), Some(sigma))
    }
}

impl Adversary for Nonadaptive {
    fn kind(&self) -> AdversaryKind {
        AdversaryKind::Nonadaptive
    }

    fn sigma(&self) -> Option<SmoothnessParam> {
        self.sigma
    }

    fn emit(&mut self, _t: usize, _l: &dyn OnlineLearner, _rng: &mut dyn RngCore) -> Result<Emission> {
        Ok(self.emission.clone())
    }

    fn observe(&mut self, _x: usize, _y: i8, _played: usize) {}
}

/// Round 1 uniform on `[0, ¼] ∪ [¾, 1]`; afterwards uniform on whichever
/// quarter the first instance fell in. Every label is +1.
#[derive(Debug, Clone)]
pub struct StickyQuarter {
    domain: Arc<Domain>,
    low: Vec<usize>,
    high: Vec<usize>,
    first: Option<bool>,
}

impl StickyQuarter {
    pub fn new(domain: Arc<Domain>) -> Result<Self> {
        if domain.dim() != 1 {
            return Err(Error::param("domain", "needs a 1-D grid on [0, 1]"));
        }
        let mut low = Vec::new();
        let mut high = Vec::new();
        for a in 0..domain.len() {
            let x = domain
                .coord(a)
                .ok_or_else(|| Error::MissingEmbedding("appendixB".into()))?;
            if !(0.0..=1.0).contains(&x) {
                return Err(Error::param("domain", format!("coordinate {x} outside [0, 1]")));
            }
            if x <= 0.25 {
                low.push(a);
            } else if x >= 0.75 {
                high.push(a);
            }
        }
        if low.is_empty() || high.is_empty() {
            return Err(Error::param("domain", "grid too coarse for the outer quarters"));
        }
        Ok(Self {
            domain,
            low,
            high,
            first: None,
        })
    }
}

impl Adversary for StickyQuarter {
    fn kind(&self) -> AdversaryKind {
        AdversaryKind::StickyQuarter
    }

    fn sigma(&self) -> Option<SmoothnessParam> {
        Some(SmoothnessParam::new(0.25).expect("valid"))
    }

    fn emit(&mut self, _t: usize, _l: &dyn OnlineLearner, _rng: &mut dyn RngCore) -> Result<Emission> {
        let support: Vec<usize> = match self.first {
            None => self.low.iter().chain(&self.high).copied().collect(),
            Some(true) => self.low.clone(),
            Some(false) => self.high.clone(),
        };
        Ok(Emission {
            marginal: Dist::uniform_on(Arc::clone(&self.domain), &support)?,
            labels: vec![1; self.domain.len()],
        })
    }

    fn observe(&mut self, x: usize, _y: i8, _played: usize) {
        if self.first.is_none() {
            self.first = Some(self.low.contains(&x));
        }
    }
}

/// Tracks the cuts consistent with a hidden target threshold and puts as much
/// mass as σ-smoothness allows on the atoms where those cuts disagree.
#[derive(Debug, Clone)]
pub struct UncertaintyRegion {
    domain: Arc<Domain>,
    sigma: SmoothnessParam,
    rank: Vec<usize>,
    by_rank: Vec<Vec<usize>>,
    target: usize,
    lo: usize,
    hi: usize,
}

impl UncertaintyRegion {
    /// Target cut drawn uniformly from all `G + 1` cuts.
    pub fn new(domain: Arc<Domain>, sigma: SmoothnessParam, rng: &mut dyn RngCore) -> Result<Self> {
        let rank = coordinate_ranks(&domain)?;
        let groups = rank.iter().max().map_or(0, |m| m + 1);
        let target = rng.gen_range(0..=groups);
        Self::with_target(domain, sigma, target)
    }

    pub fn with_target(domain: Arc<Domain>, sigma: SmoothnessParam, target: usize) -> Result<Self> {
        let rank = coordinate_ranks(&domain)?;
        let groups = rank.iter().max().map_or(0, |m| m + 1);
        if target > groups {
            return Err(Error::param("target", format!("cut {target} exceeds {groups}")));
        }
        let mut by_rank = vec![Vec::new(); groups];
        for (a, &r) in rank.iter().enumerate() {
            by_rank[r].push(a);
        }
        Ok(Self {
            domain,
            sigma,
            rank,
            by_rank,
            target,
            lo: 0,
            hi: groups,
        })
    }

    /// Atoms on which consistent cuts disagree.
    pub fn region(&self) -> Vec<usize> {
        self.by_rank[self.lo..self.hi].iter().flatten().copied().collect()
    }

    pub fn target(&self) -> usize {
        self.target
    }
}

/// Each `region` atom gets `min(1/(σN), 1/r)`; the rest of the mass is spread
/// evenly over the other atoms.
pub fn capped_region_dist(domain: Arc<Domain>, sigma: SmoothnessParam, region: &[usize]) -> Result<Dist> {
    let n = domain.len();
    let r = region.len();
    if r == 0 || r == n {
        return Ok(Dist::uniform(domain));
    }
    let per = sigma.cap(n).min(1.0 / r as f64);
    let rest = (1.0 - per * r as f64).max(0.0) / (n - r) as f64;
    let mut w = vec![rest; n];
    for &a in region {
        w[a] = per;
    }
    Dist::new(domain, w)
}

impl Adversary for UncertaintyRegion {
    fn kind(&self) -> AdversaryKind {
        AdversaryKind::UncertaintyRegion
    }

    fn sigma(&self) -> Option<SmoothnessParam> {
        Some(self.sigma)
    }

    fn emit(&mut self, _t: usize, _l: &dyn OnlineLearner, _rng: &mut dyn RngCore) -> Result<Emission> {
        Ok(Emission {
            marginal: capped_region_dist(Arc::clone(&self.domain), self.sigma, &self.region())?,
            labels: labels_from_cut(&self.rank, self.target),
        })
    }

    fn observe(&mut self, x: usize, y: i8, _played: usize) {
        let r = self.rank[x];
        if y > 0 {
            self.hi = self.hi.min(r);
        } else {
            self.lo = self.lo.max(r + 1);
        }
    }
}

/// Point masses at the middle of the cuts still consistent with its own past
/// labels, labeled against the learner's more probable prediction. Once one
/// cut remains it can no longer force mistakes; it then picks whichever atom
/// adjacent to that cut the learner is more likely to get wrong.
#[derive(Debug, Clone)]
pub struct BinarySearch {
    domain: Arc<Domain>,
    rank: Vec<usize>,
    by_rank: Vec<Vec<usize>>,
    lo: usize,
    hi: usize,
    exhausted_at: Option<usize>,
}

impl BinarySearch {
    pub fn new(domain: Arc<Domain>) -> Result<Self> {
        let rank = coordinate_ranks(&domain)?;
        let groups = rank.iter().max().map_or(0, |m| m + 1);
        let mut by_rank = vec![Vec::new(); groups];
        for (a, &r) in rank.iter().enumerate() {
            by_rank[r].push(a);
        }
        Ok(Self {
            domain,
            rank,
            by_rank,
            lo: 0,
            hi: groups,
            exhausted_at: None,
        })
    }

    /// Round (0-based) at which the consistent cuts narrowed to one.
    pub fn exhausted_at(&self) -> Option<usize> {
        self.exhausted_at
    }
}

impl Adversary for BinarySearch {
    fn kind(&self) -> AdversaryKind {
        AdversaryKind::BinarySearch
    }

    fn sigma(&self) -> Option<SmoothnessParam> {
        None
    }

    fn emit(&mut self, t: usize, learner: &dyn OnlineLearner, _rng: &mut dyn RngCore) -> Result<Emission> {
        let (x, positive) = if self.lo < self.hi {
            let r = (self.lo + self.hi - 1) / 2;
            let x = self.by_rank[r][0];
            (x, learner.prob_positive(x) < 0.5)
        } else {
            self.exhausted_at.get_or_insert(t);
            let cut = self.lo;
            // A mixture of thresholds errs most right next to the cut.
            let mut candidates = Vec::with_capacity(2);
            if cut > 0 {
                candidates.push(self.by_rank[cut - 1][0]);
            }
            if cut < self.by_rank.len() {
                candidates.push(self.by_rank[cut][0]);
            }
            let mut best = (candidates[0], -1.0f64);
            for x in candidates {
                let p = learner.prob_positive(x);
                let wrong = if self.rank[x] >= cut { 1.0 - p } else { p };
                if wrong > best.1 {
                    best = (x, wrong);
                }
            }
            (best.0, self.rank[best.0] >= cut)
        };
        let mut labels = labels_from_cut(&self.rank, self.lo);
        labels[x] = if positive { 1 } else { -1 };
        Ok(Emission {
            marginal: Dist::point_mass(Arc::clone(&self.domain), x)?,
            labels,
        })
    }

    fn observe(&mut self, x: usize, y: i8, _played: usize) {
        let r = self.rank[x];
        if y > 0 {
            self.hi = self.hi.min(r);
        } else {
            self.lo = self.lo.max(r + 1);
        }
    }

    fn note(&self) -> Option<String> {
        self.exhausted_at
            .map(|t| format!("grid resolution exhausted at round {}", t + 1))
    }
}

/// Builds an adversary of `kind` over a 1-D domain. Random choices (the
/// hidden target) come from `rng`.
pub fn make_adversary(
    kind: AdversaryKind,
    domain: Arc<Domain>,
    sigma: SmoothnessParam,
    rng: &mut dyn RngCore,
) -> Result<Box<dyn Adversary>> {
    Ok(match kind {
        AdversaryKind::Nonadaptive => Box::new(Nonadaptive::realizable_threshold(domain, sigma, rng)?),
        AdversaryKind::StickyQuarter => Box::new(StickyQuarter::new(domain)?),
        AdversaryKind::UncertaintyRegion => Box::new(UncertaintyRegion::new(domain, sigma, rng)?),
        AdversaryKind::BinarySearch => Box::new(BinarySearch::new(domain)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::BitSet;
    use crate::domain::is_sigma_smooth;
    use crate::online::learner::FixedLearner;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn grid(n: usize) -> Arc<Domain> {
        Arc::new(Domain::unit_grid(n).unwrap())
    }

    fn idle(n: usize) -> FixedLearner {
        FixedLearner::new(BitSet::zeros(n))
    }

    #[test]
    fn sigma_one_is_uniform() {
        let d = grid(100);
        let s = SmoothnessParam::new(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut adv = UncertaintyRegion::new(Arc::clone(&d), s, &mut rng).unwrap();
        let e = adv.emit(0, &idle(100), &mut rng).unwrap();
        assert_eq!(e.marginal, Dist::uniform(d));
    }

    #[test]
    fn region_mass_is_capped() {
        let d = grid(1000);
        // width 0.1 at σ = 0.05: the region can take all the mass.
        let s = SmoothnessParam::new(0.05).unwrap();
        let region: Vec<usize> = (300..400).collect();
        let p = capped_region_dist(Arc::clone(&d), s, &region).unwrap();
        let mass: f64 = region.iter().map(|&a| p.weights()[a]).sum();
        assert!((mass - 1.0).abs() < 1e-12);
        assert!(is_sigma_smooth(&p, s));
        // width 0.01 at σ = 0.1: region mass w/σ = 0.1.
        let s = SmoothnessParam::new(0.1).unwrap();
        let region: Vec<usize> = (500..510).collect();
        let p = capped_region_dist(Arc::clone(&d), s, &region).unwrap();
        let mass: f64 = region.iter().map(|&a| p.weights()[a]).sum();
        assert!((mass - 0.1).abs() < 1e-12);
        assert!(is_sigma_smooth(&p, s));
    }

    #[test]
    fn uncertainty_region_shrinks_with_observations() {
        let d = grid(100);
        let s = SmoothnessParam::new(0.2).unwrap();
        let mut adv = UncertaintyRegion::with_target(Arc::clone(&d), s, 40).unwrap();
        assert_eq!(adv.region().len(), 100);
        adv.observe(60, 1, 0);
        adv.observe(20, -1, 0);
        assert_eq!(adv.region(), (21..60).collect::<Vec<_>>());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let e = adv.emit(0, &idle(100), &mut rng).unwrap();
        assert_eq!(e.labels[39], -1);
        assert_eq!(e.labels[40], 1);
    }

    #[test]
    fn appendix_b_locks_into_first_quarter() {
        let d = grid(1024);
        let mut adv = StickyQuarter::new(Arc::clone(&d)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let e = adv.emit(0, &idle(1024), &mut rng).unwrap();
        assert!(is_sigma_smooth(&e.marginal, adv.sigma().unwrap()));
        assert_eq!(e.marginal.weights().iter().filter(|&&w| w > 0.0).count(), 512);
        adv.observe(900, 1, 0);
        let e = adv.emit(1, &idle(1024), &mut rng).unwrap();
        assert!(is_sigma_smooth(&e.marginal, adv.sigma().unwrap()));
        assert!(e.marginal.weights()[..768].iter().all(|&w| w == 0.0));
    }

    #[test]
    fn binary_search_emits_point_masses() {
        let d = grid(64);
        let mut adv = BinarySearch::new(Arc::clone(&d)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let e = adv.emit(0, &idle(64), &mut rng).unwrap();
        assert_eq!(e.marginal.max_weight(), 1.0);
        for s in [0.05, 0.5, 1.0] {
            assert!(!is_sigma_smooth(&e.marginal, SmoothnessParam::new(s).unwrap()));
        }
    }

    #[test]
    fn kind_names_parse() {
        for k in [
            AdversaryKind::Nonadaptive,
            AdversaryKind::StickyQuarter,
            AdversaryKind::UncertaintyRegion,
            AdversaryKind::BinarySearch,
        ] {
            assert_eq!(AdversaryKind::parse(k.name()).unwrap(), k);
        }
        assert!(AdversaryKind::parse("nope").is_err());
    }
}
