use std::io::Write;
use std::sync::Arc;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::adversary::Adversary;
use super::learner::{coordinate_ranks, Experts, HedgeLearner, OnlineLearner};
use crate::bits::BitSet;
use crate::cover::{build_cover, default_sample_size};
use crate::domain::{check_sigma_smooth, sample, Domain, SmoothnessParam};
use crate::error::{Error, Result};
use crate::hypothesis::{Family, Hypothesis, HypothesisClass};

/// Largest class listed in full when computing the best fixed hypothesis.
pub const COMPARATOR_LIMIT: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundRecord {
    /// 1-based round.
    pub t: usize,
    pub x: usize,
    pub y: i8,
    pub played: usize,
    pub loss: u8,
    pub cum_loss: u64,
    /// Best fixed comparator over rounds `1..=t`.
    pub best_hindsight: u64,
}

impl RoundRecord {
    pub fn regret(&self) -> i64 {
        self.cum_loss as i64 - self.best_hindsight as i64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretRecord {
    pub seed: u64,
    pub rounds: Vec<RoundRecord>,
    /// Whether the comparator set is the whole class on the domain.
    pub best_exact: bool,
    pub cover_size: usize,
    pub note: Option<String>,
}

impl RegretRecord {
    pub fn horizon(&self) -> usize {
        self.rounds.len()
    }

    pub fn cum_loss(&self) -> u64 {
        self.rounds.last().map_or(0, |r| r.cum_loss)
    }

    pub fn best_hindsight(&self) -> u64 {
        self.rounds.last().map_or(0, |r| r.best_hindsight)
    }

    pub fn regret(&self) -> i64 {
        self.cum_loss() as i64 - self.best_hindsight() as i64
    }

    pub fn write_csv_rows<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        for r in &self.rounds {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                self.seed,
                r.t,
                r.loss,
                r.cum_loss,
                r.best_hindsight,
                r.regret()
            )?;
        }
        Ok(())
    }
}

pub const REGRET_CSV_HEADER: &str = "seed,t,loss,cum_loss,best_hindsight,regret";

/// Runs `horizon` rounds of full-information play and scores the learner
/// against the best fixed function in `comparators`.
pub fn play_game(
    learner: &mut dyn OnlineLearner,
    adversary: &mut dyn Adversary,
    comparators: &[BitSet],
    horizon: usize,
    rng: &mut dyn RngCore,
) -> Result<Vec<RoundRecord>> {
    if horizon == 0 {
        return Err(Error::param("T", "need at least one round"));
    }
    if comparators.is_empty() {
        return Err(Error::Empty("comparators"));
    }
    let n = learner.domain_len();
    let mut comp_loss = vec![0u64; comparators.len()];
    let mut cum = 0u64;
    let mut out = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let e = adversary.emit(t, &*learner, rng)?;
        if e.marginal.len() != n || e.labels.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: e.marginal.len(),
            });
        }
        if let Some(s) = adversary.sigma() {
            check_sigma_smooth(&e.marginal, s)?;
        }
        let played = learner.choose(rng);
        let x = sample(&e.marginal, rng);
        let y = e.labels[x];
        let loss = u8::from(learner.predicts(played, x) != (y > 0));
        cum += u64::from(loss);
        for (c, f) in comp_loss.iter_mut().zip(comparators) {
            *c += u64::from(f.get(x) != (y > 0));
        }
        out.push(RoundRecord {
            t: t + 1,
            x,
            y,
            played,
            loss,
            cum_loss: cum,
            best_hindsight: *comp_loss.iter().min().expect("nonempty"),
        });
        learner.observe(x, y)?;
        adversary.observe(x, y, played);
    }
    Ok(out)
}

/// Knobs for [`smooth_online_play`]; `None` picks the default.
/// Rewrites `best_hindsight` in `rounds` with the exact best threshold cut.
/// Cut `j` is positive on atoms of rank at least `j`; `rank` comes from
/// [`coordinate_ranks`](super::coordinate_ranks).
pub fn threshold_hindsight(rank: &[usize], rounds: &mut [RoundRecord]) {
    let cuts = rank.iter().copied().max().map_or(1, |r| r + 2);
    let mut loss = vec![0u64; cuts];
    for r in rounds.iter_mut() {
        let k = rank[r.x];
        let wrong = if r.y > 0 { k + 1..cuts } else { 0..k + 1 };
        for l in &mut loss[wrong] {
            *l += 1;
        }
        r.best_hindsight = *loss.iter().min().expect("at least one cut");
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PlayOptions {
    /// Cover radius; default `σ / (4√T)`.
    pub gamma: Option<f64>,
    /// Cover sample size; default `⌈8 · vc · ln(1/γ) / γ²⌉`.
    pub sample_size: Option<usize>,
}

pub fn cover_radius(sigma: SmoothnessParam, horizon: usize) -> f64 {
    sigma.value() / (4.0 * (horizon as f64).sqrt())
}

/// Builds a γ-cover of `class` under the uniform measure, then plays Hedge
/// over it against `adversary` for `horizon` rounds.
#[allow(clippy::too_many_arguments)]
pub fn smooth_online_play<R: Rng>(
    class: &HypothesisClass,
    domain: &Arc<Domain>,
    sigma: SmoothnessParam,
    horizon: usize,
    adversary: &mut dyn Adversary,
    options: PlayOptions,
    seed: u64,
    rng: &mut R,
) -> Result<RegretRecord> {
    if horizon == 0 {
        return Err(Error::param("T", "need at least one round"));
    }
    let gamma = options.gamma.unwrap_or_else(|| cover_radius(sigma, horizon));
    let m = match options.sample_size {
        Some(m) => m,
        None => default_sample_size(class.vc_dim(), gamma)?,
    };
    let cover = build_cover(class, domain, gamma, m, rng)?;
    // Thresholds on a line are played as cuts and have an exact running best
    // cut, so neither the cover nor the class gets materialized.
    let cuts = match class.family() {
        Family::Threshold1d => threshold_cuts(domain, cover.members())?,
        _ => None,
    };
    let (mut learner, comparators, best_exact, rank) = match cuts {
        Some((rank, cuts)) => {
            let experts = Experts::Cuts {
                rank: rank.clone(),
                cuts,
            };
            let learner = HedgeLearner::with_experts(experts, horizon)?;
            (learner, vec![BitSet::zeros(domain.len())], true, Some(rank))
        }
        None => {
            let members = cover.materialize(domain)?;
            let (comparators, exact) = comparator_set(class, domain, &members, gamma, m, rng)?;
            (HedgeLearner::new(members, horizon)?, comparators, exact, None)
        }
    };
    let mut rounds = play_game(&mut learner, adversary, &comparators, horizon, rng)?;
    if let Some(rank) = rank {
        threshold_hindsight(&rank, &mut rounds);
    }
    Ok(RegretRecord {
        seed,
        rounds,
        best_exact,
        cover_size: cover.len(),
        note: adversary.note(),
    })
}

/// Atom ranks along the axis and the cut index of each member, when every
/// member is a threshold on axis 0.
fn threshold_cuts(domain: &Domain, members: &[Hypothesis]) -> Result<Option<(Vec<usize>, Vec<usize>)>> {
    let rank = coordinate_ranks(domain)?;
    let mut levels = vec![f64::NAN; rank.iter().max().map_or(0, |r| r + 1)];
    for (a, &r) in rank.iter().enumerate() {
        levels[r] = domain
            .coord(a)
            .ok_or_else(|| Error::MissingEmbedding("threshold1d".into()))?;
    }
    let mut cuts = Vec::with_capacity(members.len());
    for h in members {
        match h {
            Hypothesis::Threshold { axis: 0, b } => cuts.push(levels.partition_point(|&c| c < *b)),
            _ => return Ok(None),
        }
    }
    Ok(Some((rank, cuts)))
}

/// The whole class when it can be listed; otherwise the cover together with a
/// ten times finer one, flagged approximate.
fn comparator_set<R: Rng>(
    class: &HypothesisClass,
    domain: &Domain,
    members: &[BitSet],
    gamma: f64,
    m: usize,
    rng: &mut R,
) -> Result<(Vec<BitSet>, bool)> {
    if let Some(all) = class.enumerate(domain, COMPARATOR_LIMIT)? {
        let bits = all.iter().map(|h| h.materialize(domain)).collect::<Result<_>>()?;
        return Ok((bits, true));
    }
    let fine_m = default_sample_size(class.vc_dim(), gamma / 10.0)?.max(m);
    let fine = build_cover(class, domain, gamma / 10.0, fine_m, rng)?;
    let mut bits = members.to_vec();
    bits.extend(fine.materialize(domain)?);
    Ok((bits, fine.saturated()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Dist;
    use crate::online::adversary::{BinarySearch, Nonadaptive, UncertaintyRegion};
    use crate::online::learner::{FixedLearner, HalvingLearner};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn grid(n: usize) -> Arc<Domain> {
        Arc::new(Domain::unit_grid(n).unwrap())
    }

    #[test]
    fn threshold_cuts_agree_with_materialized_members() {
        let d = grid(37);
        let class = HypothesisClass::parse("threshold1d").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let cover = build_cover(&class, &d, 0.2, 40, &mut rng).unwrap();
        let (rank, cuts) = threshold_cuts(&d, cover.members()).unwrap().unwrap();
        let experts = Experts::Cuts { rank, cuts };
        for (j, bits) in cover.materialize(&d).unwrap().iter().enumerate() {
            assert_eq!(&experts.materialize(j), bits);
        }
    }

    #[test]
    fn single_round_regret_is_zero_or_one() {
        let d = grid(64);
        let s = SmoothnessParam::new(0.1).unwrap();
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut adv = UncertaintyRegion::new(Arc::clone(&d), s, &mut rng).unwrap();
            let r = smooth_online_play(
                &HypothesisClass::threshold1d(),
                &d,
                s,
                1,
                &mut adv,
                PlayOptions::default(),
                seed,
                &mut rng,
            )
            .unwrap();
            assert!(r.best_exact);
            assert!(r.regret() == 0 || r.regret() == 1);
        }
    }

    #[test]
    fn record_is_internally_consistent() {
        let d = grid(128);
        let s = SmoothnessParam::new(0.05).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut adv = UncertaintyRegion::new(Arc::clone(&d), s, &mut rng).unwrap();
        let class = HypothesisClass::threshold1d();
        let r = smooth_online_play(&class, &d, s, 300, &mut adv, PlayOptions::default(), 9, &mut rng).unwrap();
        // Recompute everything from the transcript.
        let all: Vec<BitSet> = class
            .enumerate(&d, COMPARATOR_LIMIT)
            .unwrap()
            .unwrap()
            .iter()
            .map(|h| h.materialize(&d).unwrap())
            .collect();
        let total: u64 = r.rounds.iter().map(|x| u64::from(x.loss)).sum();
        assert_eq!(total, r.cum_loss());
        let best = all
            .iter()
            .map(|f| r.rounds.iter().filter(|x| f.get(x.x) != (x.y > 0)).count() as u64)
            .min()
            .unwrap();
        assert_eq!(best, r.best_hindsight());
        assert_eq!(r.regret(), total as i64 - best as i64);
    }

    #[test]
    fn single_expert_has_no_learner_regret() {
        let d = grid(32);
        let f = BitSet::from_fn(32, |a| a >= 10);
        let mut learner = FixedLearner::new(f.clone());
        let s = SmoothnessParam::new(0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut adv = UncertaintyRegion::with_target(Arc::clone(&d), s, 20).unwrap();
        let rounds = play_game(&mut learner, &mut adv, &[f], 100, &mut rng).unwrap();
        assert_eq!(rounds.last().unwrap().regret(), 0);
    }

    #[test]
    fn halving_loses_every_round_to_binary_search() {
        let d = grid(1 << 10);
        let mut learner = HalvingLearner::new(&d).unwrap();
        let mut adv = BinarySearch::new(Arc::clone(&d)).unwrap();
        let comps: Vec<BitSet> = crate::hypothesis::threshold_grid(&d, 0)
            .unwrap()
            .iter()
            .map(|h| h.materialize(&d).unwrap())
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let rounds = play_game(&mut learner, &mut adv, &comps, 10, &mut rng).unwrap();
        assert_eq!(rounds.last().unwrap().cum_loss, 10);
        assert_eq!(rounds.last().unwrap().best_hindsight, 0);
        let mut swept = rounds.clone();
        for r in &mut swept {
            r.best_hindsight = 99;
        }
        threshold_hindsight(&crate::online::coordinate_ranks(&d).unwrap(), &mut swept);
        assert_eq!(swept, rounds);
    }

    #[test]
    fn non_smooth_emission_under_smooth_kind_is_an_error() {
        let d = grid(16);
        let s = SmoothnessParam::new(0.5).unwrap();
        let bad = Dist::point_mass(Arc::clone(&d), 3).unwrap();
        let mut adv = Nonadaptive::new(bad, vec![1; 16], Some(s)).unwrap();
        let mut learner = FixedLearner::new(BitSet::zeros(16));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = play_game(&mut learner, &mut adv, &[BitSet::zeros(16)], 5, &mut rng);
        assert!(matches!(r, Err(Error::NotSmooth { .. })));
    }

    #[test]
    fn realizable_nonadaptive_regret_is_sublinear() {
        let d = grid(512);
        let s = SmoothnessParam::new(0.1).unwrap();
        let class = HypothesisClass::threshold1d();
        let mean_rate = |t: usize| {
            (0..20u64)
                .map(|seed| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    let mut adv = Nonadaptive::realizable_threshold(Arc::clone(&d), s, &mut rng).unwrap();
                    let r =
                        smooth_online_play(&class, &d, s, t, &mut adv, PlayOptions::default(), seed, &mut rng).unwrap();
                    r.regret() as f64 / t as f64
                })
                .sum::<f64>()
                / 20.0
        };
        assert!(mean_rate(2000) < mean_rate(500));
    }

    #[test]
    fn csv_rows() {
        let rec = RegretRecord {
            seed: 3,
            rounds: vec![RoundRecord {
                t: 1,
                x: 0,
                y: 1,
                played: 0,
                loss: 1,
                cum_loss: 1,
                best_hindsight: 0,
            }],
            best_exact: true,
            cover_size: 1,
            note: None,
        };
        let mut buf = Vec::new();
        rec.write_csv_rows(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "3,1,1,1,0,1\n");
    }
}
