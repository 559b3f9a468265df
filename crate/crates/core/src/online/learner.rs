use rand::RngCore;

use super::hedge::HedgeState;
use crate::bits::BitSet;
use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::hypothesis::threshold_grid;

/// A full-information online learner over a finite list of {0,1} functions on
/// the instance domain.
pub trait OnlineLearner {
    /// Number of functions the learner plays from.
    fn size(&self) -> usize;

    /// Size of the instance domain.
    fn domain_len(&self) -> usize;

    /// Whether member `j` labels instance `x` positive.
    fn predicts(&self, j: usize, x: usize) -> bool;

    /// Picks the member played this round.
    fn choose(&mut self, rng: &mut dyn RngCore) -> usize;

    /// Probability that this round's play labels instance `x` positive.
    fn prob_positive(&self, x: usize) -> f64;

    /// Full-information feedback for the realized `(x, y)`.
    fn observe(&mut self, x: usize, y: i8) -> Result<()>;
}

/// How a Hedge learner stores its members.
#[derive(Debug, Clone, PartialEq)]
pub enum Experts {
    Bits(Vec<BitSet>),
    /// Threshold cuts on a rank order: member `j` is positive where
    /// `rank[x] >= cuts[j]`. Avoids materializing large threshold covers.
    Cuts {
        rank: Vec<usize>,
        cuts: Vec<usize>,
    },
}

impl Experts {
    pub fn len(&self) -> usize {
        match self {
            Experts::Bits(b) => b.len(),
            Experts::Cuts { cuts, .. } => cuts.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn domain_len(&self) -> usize {
        match self {
            Experts::Bits(b) => b[0].len(),
            Experts::Cuts { rank, .. } => rank.len(),
        }
    }

    #[inline]
    pub fn predicts(&self, j: usize, x: usize) -> bool {
        match self {
            Experts::Bits(b) => b[j].get(x),
            Experts::Cuts { rank, cuts } => rank[x] >= cuts[j],
        }
    }

    /// Member `j` as a bitset.
    pub fn materialize(&self, j: usize) -> BitSet {
        match self {
            Experts::Bits(b) => b[j].clone(),
            Experts::Cuts { rank, cuts } => BitSet::from_fn(rank.len(), |x| rank[x] >= cuts[j]),
        }
    }
}

/// Hedge with randomized play.
#[derive(Debug, Clone)]
pub struct HedgeLearner {
    experts: Experts,
    state: HedgeState,
}

impl HedgeLearner {
    pub fn new(members: Vec<BitSet>, horizon: usize) -> Result<Self> {
        Self::with_experts(Experts::Bits(members), horizon)
    }

    pub fn with_experts(experts: Experts, horizon: usize) -> Result<Self> {
        if experts.is_empty() {
            return Err(Error::Empty("experts"));
        }
        if let Experts::Bits(b) = &experts {
            if let Some(m) = b.iter().find(|m| m.len() != b[0].len()) {
                return Err(Error::LengthMismatch {
                    expected: b[0].len(),
                    actual: m.len(),
                });
            }
        }
        let state = HedgeState::new(experts.len(), horizon)?;
        Ok(Self { experts, state })
    }

    pub fn state(&self) -> &HedgeState {
        &self.state
    }

    pub fn experts(&self) -> &Experts {
        &self.experts
    }
}

impl OnlineLearner for HedgeLearner {
    fn size(&self) -> usize {
        self.experts.len()
    }

    fn domain_len(&self) -> usize {
        self.experts.domain_len()
    }

    fn predicts(&self, j: usize, x: usize) -> bool {
        self.experts.predicts(j, x)
    }

    fn choose(&mut self, rng: &mut dyn RngCore) -> usize {
        self.state.sample(rng)
    }

    fn prob_positive(&self, x: usize) -> f64 {
        self.state
            .weights()
            .iter()
            .enumerate()
            .filter(|&(j, _)| self.experts.predicts(j, x))
            .map(|(_, w)| w)
            .sum()
    }

    fn observe(&mut self, x: usize, y: i8) -> Result<()> {
        let losses: Vec<f64> = (0..self.experts.len())
            .map(|j| {
                if self.experts.predicts(j, x) != (y > 0) {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        self.state.update(&losses)
    }
}

/// Deterministic halving over the thresholds of a 1-D domain: plays the
/// median of the cuts consistent with everything seen so far.
#[derive(Debug, Clone)]
pub struct HalvingLearner {
    cuts: usize,
    rank: Vec<usize>,
    lo: usize,
    hi: usize,
}

impl HalvingLearner {
    pub fn new(domain: &Domain) -> Result<Self> {
        let cuts = threshold_grid(domain, 0)?.len();
        let rank = coordinate_ranks(domain)?;
        Ok(Self {
            hi: cuts - 1,
            cuts,
            rank,
            lo: 0,
        })
    }

    fn current(&self) -> usize {
        (self.lo + self.hi) / 2
    }

    /// Remaining consistent cuts `lo..=hi`.
    pub fn version_space(&self) -> (usize, usize) {
        (self.lo, self.hi)
    }
}

impl OnlineLearner for HalvingLearner {
    fn size(&self) -> usize {
        self.cuts
    }

    fn domain_len(&self) -> usize {
        self.rank.len()
    }

    /// Cut `j` is positive on atoms of rank at least `j`.
    fn predicts(&self, j: usize, x: usize) -> bool {
        self.rank[x] >= j
    }

    fn choose(&mut self, _rng: &mut dyn RngCore) -> usize {
        self.current()
    }

    fn prob_positive(&self, x: usize) -> f64 {
        if self.rank[x] >= self.current() {
            1.0
        } else {
            0.0
        }
    }

    fn observe(&mut self, x: usize, y: i8) -> Result<()> {
        let r = self.rank[x];
        if y > 0 {
            self.hi = self.hi.min(r);
        } else {
            self.lo = self.lo.max(r + 1);
        }
        if self.lo > self.hi {
            // Non-realizable feedback: restart on the side the label points to.
            (self.lo, self.hi) = if y > 0 { (0, r) } else { (r + 1, self.cuts - 1) };
        }
        Ok(())
    }
}

/// Always plays one fixed function.
#[derive(Debug, Clone)]
pub struct FixedLearner {
    members: Vec<BitSet>,
}

impl FixedLearner {
    pub fn new(f: BitSet) -> Self {
        Self { members: vec![f] }
    }
}

impl OnlineLearner for FixedLearner {
    fn size(&self) -> usize {
        1
    }

    fn domain_len(&self) -> usize {
        self.members[0].len()
    }

    fn predicts(&self, _j: usize, x: usize) -> bool {
        self.members[0].get(x)
    }

    fn choose(&mut self, _rng: &mut dyn RngCore) -> usize {
        0
    }

    fn prob_positive(&self, x: usize) -> f64 {
        if self.members[0].get(x) {
            1.0
        } else {
            0.0
        }
    }

    fn observe(&mut self, _x: usize, _y: i8) -> Result<()> {
        Ok(())
    }
}

/// Rank of each atom's first coordinate among the distinct coordinates, so
/// that threshold cut `j` is positive exactly on atoms of rank ≥ `j`.
pub fn coordinate_ranks(domain: &Domain) -> Result<Vec<usize>> {
    let order = domain.order_by_axis(0)?;
    let mut rank = vec![0; domain.len()];
    let mut r = 0;
    let mut last = None;
    for a in order {
        let c = domain
            .coord(a)
            .ok_or_else(|| Error::MissingEmbedding("threshold1d".into()))?;
        if let Some(l) = last {
            if c > l {
                r += 1;
            }
        }
        last = Some(c);
        rank[a] = r;
    }
    Ok(rank)
}
