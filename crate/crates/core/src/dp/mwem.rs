use std::io::Write;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::primitives::{exponential_mechanism, laplace_sample, multiplicative_update};
use super::projection::{kl_project_capped_simplex, SmoothPolytope};
use crate::bits::BitSet;
use crate::cover::{build_cover, default_sample_size, nearest_in_bits, Cover};
use crate::domain::{is_sigma_smooth, kl, Dataset, Dist, Sampler, SmoothnessParam};
use crate::error::{Error, Result};
use crate::hypothesis::{Hypothesis, HypothesisClass};

/// What happened in one MWEM round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundTranscript {
    pub round: usize,
    pub selected: usize,
    /// Exponential-mechanism scores `n·|q(D_{i-1}) − q(D_B)|`.
    pub scores: Vec<f64>,
    /// `q_i(D_{i-1})`.
    pub previous_value: f64,
    pub measurement: f64,
    pub pre_projection: Vec<f64>,
    pub post_projection: Vec<f64>,
    /// `KL(w ‖ D_i)` against the reference witness.
    pub potential: Option<f64>,
    /// `KL(w ‖ D̃_i)`, before projection.
    pub potential_pre: Option<f64>,
    /// `KL(D_i ‖ D̃_i)`; zero without projection.
    pub projection_divergence: f64,
}

impl RoundTranscript {
    /// `KL(w‖D̃_i) − KL(w‖D_i) − KL(D_i‖D̃_i)`, nonnegative for a witness
    /// inside the polytope.
    pub fn pythagorean_slack(&self) -> Option<f64> {
        Some(self.potential_pre? - self.potential? - self.projection_divergence)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BudgetStep {
    Select,
    Measure,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetEntry {
    pub round: usize,
    pub step: BudgetStep,
    pub epsilon: f64,
}

/// Per-round record of an MWEM run plus its privacy ledger.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MechanismTranscript {
    pub epsilon: f64,
    pub projected: bool,
    /// `KL(w ‖ D_0)`.
    pub initial_potential: Option<f64>,
    pub rounds: Vec<RoundTranscript>,
    pub budget: Vec<BudgetEntry>,
    /// `D̄`, the average of the post-projection iterates.
    pub average: Vec<f64>,
    /// `2T/|Q|` capped at 1. Reported, not enforced.
    pub failure_probability: f64,
}

impl MechanismTranscript {
    pub fn budget_spent(&self) -> f64 {
        self.budget.iter().map(|b| b.epsilon).sum()
    }

    /// `Ψ_0, Ψ_1, …, Ψ_T` when a witness was supplied.
    pub fn potentials(&self) -> Option<Vec<f64>> {
        let mut out = vec![self.initial_potential?];
        for r in &self.rounds {
            out.push(r.potential?);
        }
        Some(out)
    }

    /// `Σ_i (Ψ_{i-1} − Ψ_i) − (Ψ_0 − Ψ_T)`.
    pub fn telescoping_residual(&self) -> Option<f64> {
        let psi = self.potentials()?;
        let sum: f64 = psi.windows(2).map(|w| w[0] - w[1]).sum();
        Some(sum - (psi[0] - psi[psi.len() - 1]))
    }

    /// One JSON object per round followed by a summary line.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        let json = |e: serde_json::Error| Error::Io(e.to_string());
        for r in &self.rounds {
            writeln!(w, "{}", serde_json::to_string(r).map_err(json)?)?;
        }
        let summary = serde_json::json!({
            "epsilon": self.epsilon,
            "budget_spent": self.budget_spent(),
            "projected": self.projected,
            "initial_potential": self.initial_potential,
            "failure_probability": self.failure_probability,
            "average": self.average,
        });
        writeln!(w, "{summary}")?;
        Ok(())
    }
}

struct Run<'a> {
    queries: &'a [BitSet],
    rounds: usize,
    epsilon: f64,
    polytope: Option<SmoothPolytope>,
    witness: Option<&'a Dist>,
}

impl Run<'_> {
    fn execute<R: Rng + ?Sized>(&self, data: &Dataset, rng: &mut R) -> Result<(Dist, MechanismTranscript)> {
        let domain = data.domain();
        if self.rounds == 0 {
            return Err(Error::param("T", "need at least one round"));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::param(
                "epsilon",
                format!("must be positive, got {}", self.epsilon),
            ));
        }
        if self.queries.is_empty() {
            return Err(Error::Empty("queries"));
        }
        if let Some(q) = self.queries.iter().find(|q| q.len() != domain.len()) {
            return Err(Error::LengthMismatch {
                expected: domain.len(),
                actual: q.len(),
            });
        }
        if let Some(w) = self.witness {
            data.empirical().check_same_domain(w)?;
        }
        let n = data.n() as f64;
        let t = self.rounds as f64;
        let step_eps = self.epsilon / (2.0 * t);
        let truth = answers(self.queries, &data.empirical());
        let potential = |d: &[f64]| self.witness.map(|w| kl(w.weights(), d));

        let mut current = Dist::uniform(domain.clone());
        let initial_potential = potential(current.weights());
        let mut sum = vec![0.0; domain.len()];
        let mut rounds = Vec::with_capacity(self.rounds);
        let mut budget = Vec::with_capacity(2 * self.rounds);
        for i in 1..=self.rounds {
            let prev = answers(self.queries, &current);
            let scores: Vec<f64> = prev.iter().zip(&truth).map(|(a, b)| n * (a - b).abs()).collect();
            let selected = exponential_mechanism(&scores, step_eps, 1.0, rng)?;
            budget.push(BudgetEntry {
                round: i,
                step: BudgetStep::Select,
                epsilon: step_eps,
            });
            let measurement = truth[selected] + laplace_sample(1.0 / (n * step_eps), rng)?;
            budget.push(BudgetEntry {
                round: i,
                step: BudgetStep::Measure,
                epsilon: step_eps,
            });

            let pre = multiplicative_update(&current, &self.queries[selected], measurement, prev[selected])?;
            let post = match &self.polytope {
                Some(k) => kl_project_capped_simplex(&pre, k)?,
                None => pre.clone(),
            };
            for (s, w) in sum.iter_mut().zip(post.weights()) {
                *s += w;
            }
            rounds.push(RoundTranscript {
                round: i,
                selected,
                scores,
                previous_value: prev[selected],
                measurement,
                potential: potential(post.weights()),
                potential_pre: potential(pre.weights()),
                projection_divergence: kl(post.weights(), pre.weights()),
                pre_projection: pre.weights().to_vec(),
                post_projection: post.weights().to_vec(),
            });
            current = post;
        }
        for s in &mut sum {
            *s /= t;
        }
        let average = Dist::new(domain.clone(), sum)?;
        let transcript = MechanismTranscript {
            epsilon: self.epsilon,
            projected: self.polytope.is_some(),
            initial_potential,
            rounds,
            budget,
            average: average.weights().to_vec(),
            failure_probability: (2.0 * t / self.queries.len() as f64).min(1.0),
        };
        Ok((average, transcript))
    }
}

/// `q(D)` for every query.
pub fn answers(queries: &[BitSet], dist: &Dist) -> Vec<f64> {
    let w = dist.weights();
    queries.par_iter().map(|q| q.weighted_count(w)).collect()
}

/// Largest `|q(a) − q(b)|` over `queries`.
pub fn max_query_error(queries: &[BitSet], a: &Dist, b: &Dist) -> f64 {
    answers(queries, a)
        .iter()
        .zip(answers(queries, b))
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Baseline MWEM over a finite query list. Potentials are tracked against
/// the data distribution.
pub fn mwem<R: Rng + ?Sized>(
    data: &Dataset,
    queries: &[BitSet],
    rounds: usize,
    epsilon: f64,
    rng: &mut R,
) -> Result<(Dist, MechanismTranscript)> {
    let empirical = data.empirical();
    Run {
        queries,
        rounds,
        epsilon,
        polytope: None,
        witness: Some(&empirical),
    }
    .execute(data, rng)
}

/// Knobs shared by the smooth variants.
#[derive(Debug, Clone, Default)]
pub struct SmoothMwemOptions {
    /// Cover radius; defaults to `σ/(4n)`.
    pub gamma: Option<f64>,
    /// Cover sample size; defaults to the VC sample bound for `gamma`.
    pub sample_size: Option<usize>,
    /// σ-smooth distribution the potentials are measured against.
    pub witness: Option<Dist>,
}

impl SmoothMwemOptions {
    pub fn gamma_for(&self, sigma: SmoothnessParam, n: usize) -> f64 {
        self.gamma.unwrap_or(sigma.value() / (4.0 * n as f64))
    }
}

/// Output of the smooth mechanisms: the released distribution and the cover
/// it was trained on.
#[derive(Debug, Clone)]
pub struct SmoothRelease {
    pub dist: Dist,
    pub cover: Cover,
    pub transcript: MechanismTranscript,
    queries: Vec<BitSet>,
    values: Vec<f64>,
    uniform: Dist,
}

impl SmoothRelease {
    /// Materialized cover members, in cover order.
    pub fn cover_queries(&self) -> &[BitSet] {
        &self.queries
    }

    /// `q′(D̄)` for the cover member nearest to `q` under the uniform measure.
    pub fn answer(&self, q: &BitSet) -> Result<f64> {
        let (idx, _) = nearest_in_bits(q, &self.queries, &self.uniform)?;
        Ok(self.values[idx])
    }

    pub fn answer_hypothesis(&self, h: &Hypothesis) -> Result<f64> {
        self.answer(&h.materialize(self.dist.domain())?)
    }

    /// `q(D̄)` evaluated directly.
    pub fn evaluate(&self, q: &BitSet) -> Result<f64> {
        crate::domain::query_value(q, &self.dist)
    }
}

#[allow(clippy::too_many_arguments)]
fn smooth_run<R: Rng + ?Sized>(
    data: &Dataset,
    class: &HypothesisClass,
    sigma: SmoothnessParam,
    rounds: usize,
    epsilon: f64,
    options: &SmoothMwemOptions,
    project: bool,
    rng: &mut R,
) -> Result<SmoothRelease> {
    let domain = data.domain();
    let gamma = options.gamma_for(sigma, data.n());
    let m = match options.sample_size {
        Some(m) => m,
        None => default_sample_size(class.vc_dim(), gamma)?,
    };
    let cover = build_cover(class, domain, gamma, m, rng)?;
    let queries = cover.materialize(domain)?;
    let empirical = data.empirical();
    let polytope = if project {
        Some(SmoothPolytope::new(sigma, domain.len())?)
    } else {
        None
    };
    let witness = match &options.witness {
        Some(w) => {
            if project && !is_sigma_smooth(w, sigma) {
                return Err(Error::NotSmooth {
                    sigma: sigma.value(),
                    max_weight: w.max_weight(),
                    cap: sigma.cap(w.len()),
                });
            }
            Some(w)
        }
        None if !project || is_sigma_smooth(&empirical, sigma) => Some(&empirical),
        None => None,
    };
    let (dist, transcript) = Run {
        queries: &queries,
        rounds,
        epsilon,
        polytope,
        witness,
    }
    .execute(data, rng)?;
    Ok(SmoothRelease {
        values: answers(&queries, &dist),
        uniform: Dist::uniform(domain.clone()),
        dist,
        cover,
        transcript,
        queries,
    })
}

/// MWEM over a data-independent γ-cover of `class`; any query is answered
/// through its nearest cover member.
pub fn smooth_mwem<R: Rng + ?Sized>(
    data: &Dataset,
    class: &HypothesisClass,
    sigma: SmoothnessParam,
    rounds: usize,
    epsilon: f64,
    options: &SmoothMwemOptions,
    rng: &mut R,
) -> Result<SmoothRelease> {
    smooth_run(data, class, sigma, rounds, epsilon, options, false, rng)
}

/// Smooth MWEM with a KL projection onto the σ-smooth polytope after every
/// update, so the released distribution is itself σ-smooth.
pub fn projected_smooth_mwem<R: Rng + ?Sized>(
    data: &Dataset,
    class: &HypothesisClass,
    sigma: SmoothnessParam,
    rounds: usize,
    epsilon: f64,
    options: &SmoothMwemOptions,
    rng: &mut R,
) -> Result<SmoothRelease> {
    smooth_run(data, class, sigma, rounds, epsilon, options, true, rng)
}

/// `n` iid draws from `dist`, redrawing any that would push an atom past
/// `max_count` records.
pub fn capped_sample<R: Rng + ?Sized>(dist: &Dist, n: usize, max_count: usize, rng: &mut R) -> Result<Dataset> {
    let support = dist.weights().iter().filter(|&&w| w > 0.0).count();
    if support.saturating_mul(max_count) < n {
        return Err(Error::Infeasible(format!(
            "{support} atoms with at most {max_count} records each cannot hold {n}"
        )));
    }
    let sampler = Sampler::new(dist);
    let mut counts = vec![0usize; dist.len()];
    let mut records = Vec::with_capacity(n);
    while records.len() < n {
        let a = sampler.sample(rng);
        if counts[a] < max_count {
            counts[a] += 1;
            records.push(a);
        }
    }
    Dataset::new(Arc::clone(dist.domain()), records)
}

/// A dataset of `n` records whose empirical distribution is σ-smooth, drawn
/// from `dist` with per-atom counts at most `n/(σN)`.
pub fn smooth_dataset<R: Rng + ?Sized>(dist: &Dist, sigma: SmoothnessParam, n: usize, rng: &mut R) -> Result<Dataset> {
    let max_count = (n as f64 * sigma.cap(dist.len()) + 1e-9).floor() as usize;
    capped_sample(dist, n, max_count, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{query_value, Domain};
    use crate::hypothesis::evenly_spaced_thresholds;
    use crate::rng::stream;

    fn setup(n_atoms: usize) -> (Arc<Domain>, Vec<BitSet>) {
        let d = Arc::new(Domain::unit_grid(n_atoms).unwrap());
        let qs = evenly_spaced_thresholds(&d, n_atoms)
            .unwrap()
            .iter()
            .map(|h| h.materialize(&d).unwrap())
            .collect();
        (d, qs)
    }

    #[test]
    fn budget_and_average() {
        let (d, qs) = setup(64);
        let mut rng = stream(1, 0);
        let data = Dataset::sample_iid(&Dist::uniform_on(d.clone(), &[3, 9, 40]).unwrap(), 500, &mut rng).unwrap();
        let (out, tr) = mwem(&data, &qs, 10, 1.0, &mut rng).unwrap();
        assert!((tr.budget_spent() - 1.0).abs() < 1e-12);
        assert_eq!(tr.budget.len(), 20);
        for x in 0..64 {
            let mean = tr.rounds.iter().map(|r| r.post_projection[x]).sum::<f64>() / 10.0;
            assert!((mean - out.weights()[x]).abs() < 1e-15);
        }
        let psi = tr.potentials().unwrap();
        assert!(psi.iter().all(|&p| p >= 0.0));
        assert!(tr.telescoping_residual().unwrap().abs() < 1e-9);
        let mut buf = Vec::new();
        tr.write_jsonl(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 11);
    }

    #[test]
    fn all_ones_query_and_uniform_data() {
        let (d, _) = setup(32);
        let mut rng = stream(2, 0);
        let ones = vec![BitSet::ones(32)];
        let data = Dataset::sample_iid(&Dist::uniform(d.clone()), 200, &mut rng).unwrap();
        let (out, tr) = mwem(&data, &ones, 5, 1.0, &mut rng).unwrap();
        assert!((query_value(&ones[0], &out).unwrap() - 1.0).abs() < 1e-12);
        assert!(tr.rounds.iter().all(|r| r.scores[0].abs() < 1e-9));

        let (_, qs) = setup(32);
        let data = Dataset::from_counts(d.clone(), &[4; 32]).unwrap();
        let (out, _) = mwem(&data, &qs, 10, 1e4, &mut rng).unwrap();
        assert!(out.total_variation(&Dist::uniform(d)).unwrap() <= 0.1);
    }

    #[test]
    fn large_epsilon_tracks_thresholds() {
        let (d, qs) = setup(64);
        let mut rng = stream(3, 0);
        let data = Dataset::sample_iid(
            &Dist::uniform_on(d.clone(), &(10..30).collect::<Vec<_>>()).unwrap(),
            500,
            &mut rng,
        )
        .unwrap();
        let (out, _) = mwem(&data, &qs, 10, 1e4, &mut rng).unwrap();
        let bound = 2.0 * (64f64.ln() / 10.0).sqrt();
        assert!(max_query_error(&qs, &out, &data.empirical()) <= bound);
    }

    #[test]
    fn projected_release_is_smooth_and_pythagorean() {
        let d = Arc::new(Domain::unit_grid(256).unwrap());
        let sigma = SmoothnessParam::new(0.1).unwrap();
        let mut rng = stream(4, 0);
        let window = Dist::uniform_on(d.clone(), &(50..130).collect::<Vec<_>>()).unwrap();
        let data = smooth_dataset(&window, sigma, 500, &mut rng).unwrap();
        assert!(is_sigma_smooth(&data.empirical(), sigma));
        let class = HypothesisClass::threshold1d();
        let rel =
            projected_smooth_mwem(&data, &class, sigma, 10, 1.0, &SmoothMwemOptions::default(), &mut rng).unwrap();
        assert!(is_sigma_smooth(&rel.dist, sigma));
        assert!(rel.cover.saturated());
        let tr = &rel.transcript;
        assert!(tr.initial_potential.unwrap() <= (1.0 / 0.1f64).ln() + 1e-12);
        for r in &tr.rounds {
            assert!(r.pythagorean_slack().unwrap() >= -1e-9);
            assert!(r.potential.unwrap() <= r.potential_pre.unwrap() + 1e-12);
        }
        for q in rel.cover_queries() {
            assert_eq!(rel.answer(q).unwrap(), rel.evaluate(q).unwrap());
        }
    }

    #[test]
    fn smooth_mwem_answers_through_cover() {
        let d = Arc::new(Domain::unit_grid(512).unwrap());
        let sigma = SmoothnessParam::new(0.2).unwrap();
        let mut rng = stream(5, 0);
        let data = smooth_dataset(&Dist::uniform(d.clone()), sigma, 300, &mut rng).unwrap();
        let opts = SmoothMwemOptions {
            gamma: Some(0.05),
            sample_size: Some(100),
            ..Default::default()
        };
        let rel = smooth_mwem(&data, &HypothesisClass::threshold1d(), sigma, 5, 1.0, &opts, &mut rng).unwrap();
        assert!(!rel.cover.saturated());
        let q = Hypothesis::threshold(0.37).materialize(&d).unwrap();
        let (idx, _) = nearest_in_bits(&q, rel.cover_queries(), &Dist::uniform(d.clone())).unwrap();
        assert_eq!(
            rel.answer(&q).unwrap(),
            rel.evaluate(&rel.cover_queries()[idx]).unwrap()
        );
    }

    #[test]
    fn capped_sample_respects_capacity() {
        let d = Arc::new(Domain::unit_grid(10).unwrap());
        let mut rng = stream(6, 0);
        let data = capped_sample(&Dist::uniform(d.clone()), 20, 2, &mut rng).unwrap();
        assert_eq!(data.counts(), vec![2; 10]);
        assert!(capped_sample(&Dist::uniform(d), 21, 2, &mut rng).is_err());
    }
}
