//! The pinned replication checks. Each returns a verdict with the measured
//! numbers; nothing here panics on a failed check.

use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bits::BitSet;
use crate::bracket::{bracket_thresholds, compose_brackets, verify_bracketing};
use crate::cover::{build_cover, default_sample_size};
use crate::domain::{is_sigma_smooth, Dataset, Dist, Domain, SmoothnessParam, MASS_TOL};
use crate::dp::{
    answers, exponential_probabilities, kl_objective, kl_projection_grid_search, max_probability_ratio,
    max_query_error, mwem, net_output_distribution, projected_smooth_mwem, smooth_dataset, water_fill,
    SmoothMwemOptions, SmoothPolytope,
};
use crate::error::Result;
use crate::hypothesis::{evenly_spaced_thresholds, threshold_grid, Hypothesis, HypothesisClass, SetOp};
use crate::online::{
    deviation_bound, disjoint_slabs, max_deviation_monte_carlo, play_game, smooth_online_play, BinarySearch,
    DeviationStrategy, FixedLearner, HalvingLearner, HedgeState, PlayOptions, StickyQuarter, UncertaintyRegion,
};
use crate::rng::stream;

/// Outcome of one replication check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub id: usize,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl Verdict {
    fn new(id: usize, name: &'static str, pass: bool, detail: String) -> Self {
        Self { id, name, pass, detail }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] {:>2} {}: {}", self.id, self.name, self.detail)
    }
}

fn grid(n: usize) -> Arc<Domain> {
    Arc::new(Domain::unit_grid(n).expect("n ≥ 1"))
}

fn materialize(hs: &[Hypothesis], d: &Domain) -> Result<Vec<BitSet>> {
    hs.iter().map(|h| h.materialize(d)).collect()
}

/// Uniform on `⌈width·N⌉` consecutive atoms at a random offset.
pub fn random_window<R: Rng + ?Sized>(d: &Arc<Domain>, width: f64, rng: &mut R) -> Result<Dist> {
    let n = d.len();
    let w = ((width * n as f64).ceil() as usize).clamp(1, n);
    let start = rng.gen_range(0..=n - w);
    Dist::uniform_on(d.clone(), &(start..start + w).collect::<Vec<_>>())
}

/// Non-concentration: instance averages of `1{x ≤ ½}` are all 0 or 1 and
/// average to ½.
pub fn non_concentration(base_seed: u64) -> Result<Verdict> {
    let (trials, horizon, n) = (2000, 50, 1024);
    let d = grid(n);
    let means: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let mut rng = stream(base_seed, i as u64);
            let mut adv = StickyQuarter::new(d.clone())?;
            let ones = BitSet::ones(n);
            let mut learner = FixedLearner::new(ones.clone());
            let rounds = play_game(&mut learner, &mut adv, &[ones], horizon, &mut rng)?;
            let hits = rounds.iter().filter(|r| d.coord(r.x).expect("grid") <= 0.5).count();
            Ok(hits as f64 / horizon as f64)
        })
        .collect::<Result<_>>()?;
    let bimodal = means.iter().all(|&m| m.abs() < 1e-9 || (m - 1.0).abs() < 1e-9);
    let avg = means.iter().sum::<f64>() / trials as f64;
    let pass = bimodal && (0.47..=0.53).contains(&avg);
    Ok(Verdict::new(
        1,
        "non-concentration",
        pass,
        format!("trial average {avg:.4} in [0.47, 0.53], bimodal {bimodal}"),
    ))
}

/// Regret per round falls from T=500 to T=2000 and stays under
/// `3√(T ln|H′|)` against the uncertainty-region adversary.
pub fn regret_sublinear(base_seed: u64) -> Result<Verdict> {
    let (n, seeds) = (2048, 20u64);
    let d = grid(n);
    let sigma = SmoothnessParam::new(0.05)?;
    let class = HypothesisClass::threshold1d();
    let run = |horizon: usize, seed: u64| -> Result<(f64, usize)> {
        let mut rng = stream(base_seed ^ horizon as u64, seed);
        let mut adv = UncertaintyRegion::new(d.clone(), sigma, &mut rng)?;
        let r = smooth_online_play(
            &class,
            &d,
            sigma,
            horizon,
            &mut adv,
            PlayOptions::default(),
            seed,
            &mut rng,
        )?;
        Ok((r.regret() as f64, r.cover_size))
    };
    let mean = |horizon: usize| -> Result<(f64, usize)> {
        let rs: Vec<(f64, usize)> = (0..seeds)
            .into_par_iter()
            .map(|s| run(horizon, s))
            .collect::<Result<_>>()?;
        let size = rs.iter().map(|r| r.1).max().unwrap_or(1);
        Ok((rs.iter().map(|r| r.0).sum::<f64>() / seeds as f64, size))
    };
    let (r500, _) = mean(500)?;
    let (r2000, size) = mean(2000)?;
    let bound = 3.0 * (2000.0 * (size as f64).ln()).sqrt();
    let pass = r2000 / 2000.0 < r500 / 500.0 && r2000 <= bound;
    Ok(Verdict::new(
        2,
        "sublinear regret under smoothing",
        pass,
        format!(
            "regret/T {:.4} (T=500) vs {:.4} (T=2000); regret(2000) {r2000:.2} <= {bound:.2} (|H'|={size})",
            r500 / 500.0,
            r2000 / 2000.0
        ),
    ))
}

/// The binary-search adversary forces a mistake every round on halving.
pub fn binary_search_baseline() -> Result<Verdict> {
    let (n, horizon) = (1usize << 16, 16);
    let d = grid(n);
    let mut learner = HalvingLearner::new(&d)?;
    let mut adv = BinarySearch::new(d.clone())?;
    let mut rng = stream(0, 0);
    let rounds = play_game(&mut learner, &mut adv, &[BitSet::ones(n)], horizon, &mut rng)?;
    let mistakes = rounds.last().map_or(0, |r| r.cum_loss);
    Ok(Verdict::new(
        3,
        "binary-search worst case",
        mistakes == horizon as u64,
        format!("{mistakes} mistakes in {horizon} rounds at N=2^16"),
    ))
}

/// Max deviation over disjoint ε-slabs stays under `8T(ε/σ)√ln|F|`.
pub fn max_deviation(base_seed: u64) -> Result<Verdict> {
    let (n, horizon, trials) = (1024, 400, 200);
    let sigma = SmoothnessParam::new(1.0 / 16.0)?;
    let eps = sigma.value() / 4.0;
    let slabs = disjoint_slabs(n, (1.0 / eps).round() as usize)?;
    let mut pass = true;
    let mut parts = Vec::new();
    for size in [4usize, 16, 64] {
        let family = &slabs[..size];
        let stats = max_deviation_monte_carlo(
            family,
            eps,
            sigma,
            DeviationStrategy::ConcentrateOnLeader,
            horizon,
            trials,
            base_seed ^ size as u64,
        )?;
        let bound = deviation_bound(horizon, eps, sigma.value(), size);
        pass &= stats.mean <= bound;
        parts.push(format!("|F|={size}: {:.1} <= {bound:.1}", stats.mean));
    }
    Ok(Verdict::new(4, "maximal deviation (slabs)", pass, parts.join("; ")))
}

/// Threshold bracketings: exhaustive containment, gaps, sizes, and the
/// pairwise composition.
pub fn bracketing() -> Result<Verdict> {
    let n = 1000;
    let d = grid(n);
    let mu = Dist::uniform(d.clone());
    let class = materialize(&threshold_grid(&d, 0)?, &d)?;
    let mut pass = true;
    let mut parts = Vec::new();
    // Gaps are float sums of atom masses, compared with the library's mass
    // tolerance.
    for eps in [0.25, 0.1, 0.02] {
        let b = bracket_thresholds(eps, &mu)?;
        let report = verify_bracketing(&b, &class);
        let size_ok = b.len() <= (1.0 / eps).ceil() as usize + 1;
        let gaps_ok = b.brackets().iter().all(|x| x.gap() <= eps + MASS_TOL);
        let c = compose_brackets(&[&b, &b], SetOp::Intersection)?;
        let comp_ok = c.len() == b.len() * b.len() && c.brackets().iter().all(|x| x.gap() <= 2.0 * eps + MASS_TOL);
        let ok = report.pass && size_ok && gaps_ok && comp_ok;
        pass &= ok;
        parts.push(format!(
            "eps={eps}: {} brackets, worst gap {:.4}, composed {} worst {:.4}{}",
            b.len(),
            b.max_gap(),
            c.len(),
            c.max_gap(),
            if ok { "" } else { " (violated)" }
        ));
    }
    Ok(Verdict::new(5, "threshold bracketing", pass, parts.join("; ")))
}

/// Hedge against an adaptive adversary that charges the heavier half of the
/// experts every round.
pub fn hedge_guarantee(base_seed: u64) -> Result<Verdict> {
    let (horizon, seeds) = (4000, 50u64);
    let mut pass = true;
    let mut parts = Vec::new();
    for k in [8usize, 64] {
        let runs: Vec<(f64, f64)> = (0..seeds)
            .into_par_iter()
            .map(|s| -> Result<(f64, f64)> {
                let mut rng = stream(base_seed ^ k as u64, s);
                let mut h = HedgeState::new(k, horizon)?;
                let mut totals = vec![0.0; k];
                let mut learner = 0.0;
                for _ in 0..horizon {
                    let mut order: Vec<usize> = (0..k).collect();
                    let w = h.weights();
                    order.sort_by(|&a, &b| w[b].total_cmp(&w[a]).then(a.cmp(&b)));
                    let mut losses = vec![0.0; k];
                    for &i in &order[..k / 2] {
                        losses[i] = 1.0;
                    }
                    learner += losses[h.sample(&mut rng)];
                    for (t, l) in totals.iter_mut().zip(&losses) {
                        *t += l;
                    }
                    h.update(&losses)?;
                }
                Ok((learner, totals.into_iter().fold(f64::INFINITY, f64::min)))
            })
            .collect::<Result<_>>()?;
        let mean_loss = runs.iter().map(|r| r.0).sum::<f64>() / seeds as f64;
        let mean_best = runs.iter().map(|r| r.1).sum::<f64>() / seeds as f64;
        let slack = 1.5 * 2.0 * (horizon as f64 * (k as f64).ln()).sqrt();
        pass &= mean_loss <= mean_best + slack;
        parts.push(format!("K={k}: {mean_loss:.1} <= {mean_best:.1} + {slack:.1}"));
    }
    Ok(Verdict::new(6, "hedge regret bound", pass, parts.join("; ")))
}

/// Water-filling against the pairwise grid search on small random instances.
pub fn projection_oracle(base_seed: u64) -> Result<Verdict> {
    let mut rng = stream(base_seed, 0);
    let mut worst_kl: f64 = 0.0;
    let mut worst_kkt: f64 = 0.0;
    let mut members = true;
    for _ in 0..100 {
        let n = rng.gen_range(2..=8);
        let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let p: Vec<f64> = raw.iter().map(|x| x / total).collect();
        let sigma = rng.gen_range(0.2..1.0);
        let polytope = SmoothPolytope::new(SmoothnessParam::new(sigma)?, n)?;
        let cap = polytope.cap();
        let (z, c) = water_fill(&p, cap)?;
        let oracle = kl_projection_grid_search(&p, cap)?;
        worst_kl = worst_kl.max(kl_objective(&z, &p) - kl_objective(&oracle, &p));
        for (zi, pi) in z.iter().zip(&p) {
            worst_kkt = worst_kkt.max((zi - (c * pi).min(cap)).abs());
        }
        members &= polytope.contains(&z);
    }
    let pass = worst_kl <= 1e-6 && worst_kkt <= 1e-12 && members;
    Ok(Verdict::new(
        7,
        "KL projection vs grid oracle",
        pass,
        format!("worst KL excess {worst_kl:.2e}, worst KKT residual {worst_kkt:.2e}, members {members}"),
    ))
}

/// Potential facts on projected runs: Ψ ≥ 0, Ψ_0 ≤ ln(1/σ), Pythagorean
/// inequality every round.
pub fn pythagorean(base_seed: u64) -> Result<Verdict> {
    let sigma = SmoothnessParam::new(0.1)?;
    let class = HypothesisClass::threshold1d();
    let mut checked = 0usize;
    let mut worst_slack = f64::INFINITY;
    let mut pass = true;
    for n in [256usize, 1024] {
        let d = grid(n);
        for seed in 0..10u64 {
            let mut rng = stream(base_seed ^ n as u64, seed);
            let data = smooth_dataset(&random_window(&d, 0.3, &mut rng)?, sigma, 2000, &mut rng)?;
            let rel = projected_smooth_mwem(&data, &class, sigma, 10, 1.0, &SmoothMwemOptions::default(), &mut rng)?;
            let tr = &rel.transcript;
            let Some(psi) = tr.potentials() else {
                pass = false;
                continue;
            };
            pass &= psi.iter().all(|&p| p >= 0.0);
            pass &= psi[0] <= (1.0 / sigma.value()).ln() + 1e-9;
            for r in &tr.rounds {
                let slack = r.pythagorean_slack().unwrap_or(f64::NEG_INFINITY);
                worst_slack = worst_slack.min(slack);
                pass &= slack >= -1e-9;
                checked += 1;
            }
        }
    }
    Ok(Verdict::new(
        8,
        "potential and Pythagorean facts",
        pass,
        format!("{checked} rounds checked, smallest Pythagorean slack {worst_slack:.3e}"),
    ))
}

/// MWEM max error against `2√(ln N/T) + 10T ln|Q|/(εn)` on 50 seeds.
pub fn mwem_bound(base_seed: u64) -> Result<Verdict> {
    let (n, records, rounds, eps, seeds) = (64usize, 500usize, 10usize, 1.0, 50u64);
    let d = grid(n);
    let qs = materialize(&evenly_spaced_thresholds(&d, 64)?, &d)?;
    let bound = 2.0 * ((n as f64).ln() / rounds as f64).sqrt()
        + 10.0 * rounds as f64 * (qs.len() as f64).ln() / (eps * records as f64);
    let errors: Vec<f64> = (0..seeds)
        .into_par_iter()
        .map(|s| -> Result<f64> {
            let mut rng = stream(base_seed, s);
            let data = Dataset::sample_iid(&random_window(&d, 0.3, &mut rng)?, records, &mut rng)?;
            let (out, _) = mwem(&data, &qs, rounds, eps, &mut rng)?;
            Ok(max_query_error(&qs, &out, &data.empirical()))
        })
        .collect::<Result<_>>()?;
    let within = errors.iter().filter(|&&e| e <= bound).count();
    let worst = errors.iter().copied().fold(0.0, f64::max);
    Ok(Verdict::new(
        9,
        "MWEM error bound",
        within * 10 >= seeds as usize * 9,
        format!("{within}/{seeds} seeds within {bound:.3} (worst {worst:.3})"),
    ))
}

/// Mean max error of projected smooth MWEM over the full threshold class at
/// one domain size, plus whether every output and dataset was σ-smooth.
pub fn projected_error_at(n: usize, seeds: u64, base_seed: u64) -> Result<(f64, bool)> {
    let sigma = SmoothnessParam::new(0.1)?;
    let d = grid(n);
    let class = HypothesisClass::threshold1d();
    let full = materialize(&threshold_grid(&d, 0)?, &d)?;
    let runs: Vec<(f64, bool)> = (0..seeds)
        .into_par_iter()
        .map(|s| -> Result<(f64, bool)> {
            let mut rng = stream(base_seed ^ n as u64, s);
            let data = smooth_dataset(&random_window(&d, 0.3, &mut rng)?, sigma, 2000, &mut rng)?;
            let rel = projected_smooth_mwem(&data, &class, sigma, 10, 1.0, &SmoothMwemOptions::default(), &mut rng)?;
            let smooth = is_sigma_smooth(&rel.dist, sigma) && is_sigma_smooth(&data.empirical(), sigma);
            Ok((max_query_error(&full, &rel.dist, &data.empirical()), smooth))
        })
        .collect::<Result<_>>()?;
    let mean = runs.iter().map(|r| r.0).sum::<f64>() / seeds as f64;
    Ok((mean, runs.iter().all(|r| r.1)))
}

/// Error of projected smooth MWEM barely moves as N grows 16-fold.
pub fn domain_independence(base_seed: u64) -> Result<Verdict> {
    let mut errs = Vec::new();
    let mut smooth = true;
    for n in [256usize, 1024, 4096] {
        let (e, s) = projected_error_at(n, 10, base_seed)?;
        errs.push((n, e));
        smooth &= s;
    }
    let lo = errs.iter().map(|e| e.1).fold(f64::INFINITY, f64::min);
    let hi = errs.iter().map(|e| e.1).fold(0.0, f64::max);
    let spread = hi / lo - 1.0;
    let detail = errs
        .iter()
        .map(|(n, e)| format!("N={n}: {e:.4}"))
        .collect::<Vec<_>>()
        .join(", ");
    Ok(Verdict::new(
        10,
        "domain-size independence",
        spread < 0.5 && smooth,
        format!("{detail}; spread {:.1}%, all smooth {smooth}", 100.0 * spread),
    ))
}

/// Exact output laws on adjacent datasets: MWEM's selection step alone and
/// the whole subsampled net mechanism.
pub fn privacy_ratio() -> Result<Verdict> {
    let n = 8;
    let d = grid(n);
    let qs = materialize(&evenly_spaced_thresholds(&d, 4)?, &d)?;
    let base = Dataset::new(d.clone(), vec![0, 2, 2, 5, 7])?;
    let uniform = Dist::uniform(d.clone());
    let prev = answers(&qs, &uniform);
    let scores = |b: &Dataset| -> Vec<f64> {
        let truth = answers(&qs, &b.empirical());
        prev.iter()
            .zip(truth)
            .map(|(p, t)| b.n() as f64 * (p - t).abs())
            .collect()
    };
    let mut neighbours = Vec::new();
    for i in 0..base.n() {
        for a in 0..n {
            if a != base.records()[i] {
                neighbours.push(base.with_replaced(i, a)?);
            }
        }
    }
    let mut pass = true;
    let mut parts = Vec::new();
    for eps in [0.5f64, 1.0, 2.0] {
        let limit = eps.exp() * (1.0 + 1e-9);
        let p = exponential_probabilities(&scores(&base), eps, 1.0)?;
        let mut em_worst: f64 = 1.0;
        for nb in &neighbours {
            let q = exponential_probabilities(&scores(nb), eps, 1.0)?;
            for (a, b) in p.iter().zip(&q) {
                em_worst = em_worst.max(a / b).max(b / a);
            }
        }
        let law = net_output_distribution(&base, &qs, eps, 4, 3)?;
        let net_worst = neighbours
            .par_iter()
            .map(|nb| net_output_distribution(nb, &qs, eps, 4, 3).map(|l| max_probability_ratio(&law, &l)))
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(1.0, f64::max);
        pass &= em_worst <= limit && net_worst <= limit;
        parts.push(format!(
            "eps={eps}: selection {em_worst:.4}, net {net_worst:.4} <= {:.4}",
            eps.exp()
        ));
    }
    Ok(Verdict::new(11, "exact privacy ratio", pass, parts.join("; ")))
}

/// `|q(D_B) − q′(D_B)| ≤ 2γ/σ` for every threshold and its nearest cover
/// member, on σ-smooth datasets and covers that do not see every atom.
pub fn cover_lemma(base_seed: u64) -> Result<Verdict> {
    let n = 1usize << 16;
    let d = grid(n);
    let class = HypothesisClass::threshold1d();
    let mut pass = true;
    let mut parts = Vec::new();
    for (i, (sigma, gamma)) in [(0.1, 0.05), (0.25, 0.02), (0.1, 0.01)].into_iter().enumerate() {
        let sig = SmoothnessParam::new(sigma)?;
        let mut rng = stream(base_seed, i as u64);
        let data = smooth_dataset(&random_window(&d, 0.5, &mut rng)?, sig, 20_000, &mut rng)?;
        pass &= is_sigma_smooth(&data.empirical(), sig);
        // Cover members sorted by cut index, where cut j is positive on atoms ≥ j.
        let m = default_sample_size(class.vc_dim(), gamma)?;
        let cover = build_cover(&class, &d, gamma, m, &mut rng)?;
        let mut cuts: Vec<usize> = cover
            .members()
            .iter()
            .map(|h| match h {
                Hypothesis::Threshold { b, .. } => ((b * n as f64 - 0.5).ceil().max(0.0) as usize).min(n),
                _ => unreachable!("threshold covers hold thresholds"),
            })
            .collect();
        cuts.sort_unstable();
        // suffix[j] = q_j(D_B) for cut j.
        let counts = data.counts();
        let mut suffix = vec![0.0; n + 1];
        for j in (0..n).rev() {
            suffix[j] = suffix[j + 1] + counts[j] as f64 / data.n() as f64;
        }
        let mut worst: f64 = 0.0;
        for j in 0..=n {
            let k = cuts.partition_point(|&c| c < j);
            let near = [k.checked_sub(1), (k < cuts.len()).then_some(k)]
                .into_iter()
                .flatten()
                .map(|idx| cuts[idx])
                .min_by_key(|&c| c.abs_diff(j))
                .expect("nonempty cover");
            worst = worst.max((suffix[j] - suffix[near]).abs());
        }
        let bound = 2.0 * gamma / sigma;
        pass &= worst <= bound;
        parts.push(format!(
            "sigma={sigma} gamma={gamma}: {} members ({} of {n} atoms seen), worst {worst:.2e} <= {bound:.2}",
            cover.len(),
            cover.distinct_points()
        ));
    }
    Ok(Verdict::new(12, "cover under smoothness", pass, parts.join("; ")))
}

/// Every check in order.
pub fn all_criteria(base_seed: u64) -> Vec<Result<Verdict>> {
    vec![
        non_concentration(base_seed),
        regret_sublinear(base_seed),
        binary_search_baseline(),
        max_deviation(base_seed),
        bracketing(),
        hedge_guarantee(base_seed),
        projection_oracle(base_seed),
        pythagorean(base_seed),
        mwem_bound(base_seed),
        domain_independence(base_seed),
        privacy_ratio(),
        cover_lemma(base_seed),
    ]
}
