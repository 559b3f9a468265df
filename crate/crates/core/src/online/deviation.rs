use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::BitSet;
use crate::domain::{SmoothnessParam, MASS_TOL};
use crate::error::{Error, Result};
use crate::rng::stream;

/// How the σ-smooth adversary places its mass each round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DeviationStrategy {
    /// Uniform every round.
    Uniform,
    /// Maximal mass on the support of the function with the highest count so
    /// far (lowest index on ties).
    ConcentrateOnLeader,
    /// Maximal mass on the support of one fixed function.
    Fixed(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationStats {
    pub mean: f64,
    pub std_dev: f64,
    pub per_trial: Vec<u64>,
}

/// `8 · T · (ε/σ) · √(ln |F|)`.
pub fn deviation_bound(horizon: usize, eps: f64, sigma: f64, family_size: usize) -> f64 {
    8.0 * horizon as f64 * (eps / sigma) * (family_size as f64).ln().sqrt()
}

/// Mean over trials of `max_{f ∈ F} Σ_t f(x_t)` when a σ-smooth adversary
/// following `strategy` draws `x_1..x_T`. Trial `i` uses stream `i` of `seed`.
pub fn max_deviation_monte_carlo(
    family: &[BitSet],
    eps: f64,
    sigma: SmoothnessParam,
    strategy: DeviationStrategy,
    horizon: usize,
    trials: usize,
    seed: u64,
) -> Result<DeviationStats> {
    let first = family.first().ok_or(Error::Empty("function family"))?;
    let n = first.len();
    if eps > sigma.value() {
        return Err(Error::param(
            "eps",
            format!("need ε ≤ σ, got {eps} > {}", sigma.value()),
        ));
    }
    for (i, f) in family.iter().enumerate() {
        if f.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: f.len(),
            });
        }
        let m = f.count_ones() as f64 / n as f64;
        if m > eps + MASS_TOL {
            return Err(Error::param(
                "family",
                format!("function {i} has uniform measure {m} > ε = {eps}"),
            ));
        }
    }
    if let DeviationStrategy::Fixed(i) = strategy {
        if i >= family.len() {
            return Err(Error::param("strategy", format!("fixed index {i} out of range")));
        }
    }
    if trials == 0 {
        return Err(Error::param("trials", "need at least one trial"));
    }
    let supports: Vec<Vec<usize>> = family.iter().map(|f| f.iter_ones().collect()).collect();
    let cap = sigma.cap(n);
    let per_trial: Vec<u64> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, i as u64);
            let mut counts = vec![0u64; family.len()];
            for _ in 0..horizon {
                let target = match strategy {
                    DeviationStrategy::Uniform => None,
                    DeviationStrategy::Fixed(j) => Some(j),
                    DeviationStrategy::ConcentrateOnLeader => {
                        let best = *counts.iter().max().expect("nonempty");
                        counts.iter().position(|&c| c == best)
                    }
                };
                let x = match target {
                    None => rng.gen_range(0..n),
                    Some(j) => draw_concentrated(&supports[j], &family[j], n, cap, &mut rng),
                };
                for (c, f) in counts.iter_mut().zip(family) {
                    *c += u64::from(f.get(x));
                }
            }
            counts.into_iter().max().expect("nonempty")
        })
        .collect();
    let mean = per_trial.iter().sum::<u64>() as f64 / trials as f64;
    let var = per_trial.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / trials as f64;
    Ok(DeviationStats {
        mean,
        std_dev: var.sqrt(),
        per_trial,
    })
}

/// Density `cap` on `support` and the rest spread evenly elsewhere.
fn draw_concentrated<R: Rng>(support: &[usize], f: &BitSet, n: usize, cap: f64, rng: &mut R) -> usize {
    let inside = (support.len() as f64 * cap).min(1.0);
    if support.len() == n || (!support.is_empty() && rng.gen::<f64>() < inside) {
        return support[rng.gen_range(0..support.len())];
    }
    // Rejection sampling on the complement; it has at least half the atoms
    // whenever ε ≤ σ ≤ 1 and ε < 1/2, and otherwise still terminates.
    loop {
        let x = rng.gen_range(0..n);
        if !f.get(x) {
            return x;
        }
    }
}

/// `k` disjoint slabs of `⌊N/k⌋` consecutive atoms.
pub fn disjoint_slabs(n: usize, k: usize) -> Result<Vec<BitSet>> {
    if k == 0 || k > n {
        return Err(Error::param("k", format!("need 1 ≤ k ≤ N, got {k}")));
    }
    let w = n / k;
    Ok((0..k)
        .map(|j| BitSet::from_fn(n, |a| a >= j * w && a < (j + 1) * w))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_function_uniform_is_binomial() {
        let n = 1000;
        let f = BitSet::from_fn(n, |a| a < 50);
        let s = SmoothnessParam::new(0.1).unwrap();
        let st = max_deviation_monte_carlo(&[f], 0.05, s, DeviationStrategy::Uniform, 400, 2000, 1).unwrap();
        let mean = 400.0 * 0.05;
        let sd = (400.0 * 0.05 * 0.95f64).sqrt() / (2000f64).sqrt();
        assert!((st.mean - mean).abs() <= 3.0 * sd, "mean {}", st.mean);
    }

    #[test]
    fn concentrating_on_slabs_gives_eps_over_sigma() {
        let n = 1024;
        let sigma = SmoothnessParam::new(1.0 / 16.0).unwrap();
        let eps = sigma.value() / 4.0;
        let slabs = disjoint_slabs(n, 64).unwrap();
        assert!(slabs.iter().all(|f| f.count_ones() == 16));
        let st = max_deviation_monte_carlo(&slabs, eps, sigma, DeviationStrategy::Fixed(5), 400, 500, 2).unwrap();
        // Mass ε/σ = 1/4 per round on the fixed slab.
        let sd = (400.0 * 0.25 * 0.75f64).sqrt();
        assert!(st.mean >= 100.0 - 3.0 * sd / (500f64).sqrt());
        let lead =
            max_deviation_monte_carlo(&slabs, eps, sigma, DeviationStrategy::ConcentrateOnLeader, 400, 200, 3).unwrap();
        assert!(lead.mean >= 95.0);
        assert!(lead.mean <= deviation_bound(400, eps, sigma.value(), 64));
    }

    #[test]
    fn preconditions() {
        let s = SmoothnessParam::new(0.1).unwrap();
        let big = BitSet::from_fn(100, |a| a < 20);
        assert!(max_deviation_monte_carlo(&[big], 0.1, s, DeviationStrategy::Uniform, 10, 1, 0).is_err());
        let f = BitSet::from_fn(100, |a| a < 5);
        assert!(
            max_deviation_monte_carlo(std::slice::from_ref(&f), 0.2, s, DeviationStrategy::Uniform, 10, 1, 0).is_err()
        );
        assert!(max_deviation_monte_carlo(&[], 0.05, s, DeviationStrategy::Uniform, 10, 1, 0).is_err());
        assert!(max_deviation_monte_carlo(&[f], 0.05, s, DeviationStrategy::Fixed(1), 10, 1, 0).is_err());
    }

    #[test]
    fn trials_are_reproducible() {
        let slabs = disjoint_slabs(256, 16).unwrap();
        let s = SmoothnessParam::new(0.25).unwrap();
        let a = max_deviation_monte_carlo(&slabs, 1.0 / 16.0, s, DeviationStrategy::ConcentrateOnLeader, 50, 20, 7)
            .unwrap();
        let b = max_deviation_monte_carlo(&slabs, 1.0 / 16.0, s, DeviationStrategy::ConcentrateOnLeader, 50, 20, 7)
            .unwrap();
        assert_eq!(a, b);
    }
}
