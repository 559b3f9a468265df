use rand::distributions::Open01;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits::BitSet;
use crate::domain::Dist;
use crate::error::{Error, Result};

/// Privacy parameters of an (ε, δ)-DP guarantee.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyParams {
    epsilon: f64,
    delta: f64,
}

impl PrivacyParams {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::param("epsilon", format!("must be positive, got {epsilon}")));
        }
        if !(0.0..1.0).contains(&delta) {
            return Err(Error::param("delta", format!("must lie in [0, 1), got {delta}")));
        }
        Ok(Self { epsilon, delta })
    }

    pub fn pure(epsilon: f64) -> Result<Self> {
        Self::new(epsilon, 0.0)
    }

    pub fn epsilon(self) -> f64 {
        self.epsilon
    }

    pub fn delta(self) -> f64 {
        self.delta
    }
}

/// One draw from Laplace(0, `scale`) by inverting the CDF.
pub fn laplace_sample<R: Rng + ?Sized>(scale: f64, rng: &mut R) -> Result<f64> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::param("scale", format!("must be positive, got {scale}")));
    }
    let u: f64 = rng.sample::<f64, _>(Open01) - 0.5;
    Ok(-scale * u.signum() * (1.0 - 2.0 * u.abs()).ln())
}

/// Selection probabilities `∝ exp(ε·score / (2·sensitivity))`.
pub fn exponential_probabilities(scores: &[f64], eps: f64, sensitivity: f64) -> Result<Vec<f64>> {
    if scores.is_empty() {
        return Err(Error::Empty("candidates"));
    }
    if !(eps > 0.0) {
        return Err(Error::param("eps_em", format!("must be positive, got {eps}")));
    }
    if !(sensitivity > 0.0 && sensitivity.is_finite()) {
        return Err(Error::param(
            "sensitivity",
            format!("must be positive, got {sensitivity}"),
        ));
    }
    if let Some(s) = scores.iter().find(|s| !s.is_finite()) {
        return Err(Error::param("score", format!("non-finite score {s}")));
    }
    let top = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let factor = eps / (2.0 * sensitivity);
    let mut p: Vec<f64> = scores.iter().map(|s| ((s - top) * factor).exp()).collect();
    let z: f64 = p.iter().sum();
    for w in &mut p {
        *w /= z;
    }
    Ok(p)
}

/// Index drawn by the exponential mechanism over `scores`.
pub fn exponential_mechanism<R: Rng + ?Sized>(
    scores: &[f64],
    eps: f64,
    sensitivity: f64,
    rng: &mut R,
) -> Result<usize> {
    let p = exponential_probabilities(scores, eps, sensitivity)?;
    Ok(draw_index(&p, rng))
}

/// Exponential mechanism over arbitrary candidates with a score function.
pub fn select<'a, T, R: Rng + ?Sized>(
    candidates: &'a [T],
    score: impl Fn(&T) -> f64,
    eps: f64,
    sensitivity: f64,
    rng: &mut R,
) -> Result<&'a T> {
    let scores: Vec<f64> = candidates.iter().map(score).collect();
    let i = exponential_mechanism(&scores, eps, sensitivity, rng)?;
    Ok(&candidates[i])
}

pub(crate) fn draw_index<R: Rng + ?Sized>(p: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, w) in p.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    // Rounding left the total a hair under 1.
    p.iter().rposition(|&w| w > 0.0).unwrap_or(p.len() - 1)
}

/// `D(x) ∝ D_prev(x)·exp(q(x)(m − q_prev)/2)`.
pub fn multiplicative_update(prev: &Dist, q: &BitSet, m: f64, q_prev: f64) -> Result<Dist> {
    if q.len() != prev.len() {
        return Err(Error::LengthMismatch {
            expected: prev.len(),
            actual: q.len(),
        });
    }
    let boost = ((m - q_prev) / 2.0).exp();
    let w: Vec<f64> = prev
        .weights()
        .iter()
        .enumerate()
        .map(|(x, &p)| if q.get(x) { p * boost } else { p })
        .collect();
    Dist::from_unnormalized(prev.domain().clone(), w)
}

/// Advanced composition of `rounds` mechanisms that are each `eps_round`-DP.
pub fn advanced_composition(eps_round: f64, rounds: usize, delta: f64) -> Result<PrivacyParams> {
    if !(eps_round > 0.0) || rounds == 0 {
        return Err(Error::param("eps_round", "need eps_round > 0 and T ≥ 1"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::param("delta", format!("must lie in (0, 1), got {delta}")));
    }
    let t = rounds as f64;
    let eps = eps_round * (2.0 * t * (1.0 / delta).ln()).sqrt() + t * eps_round * eps_round.exp_m1();
    PrivacyParams::new(eps, delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Domain;
    use crate::rng::stream;
    use std::sync::Arc;

    #[test]
    fn laplace_moments() {
        let mut rng = stream(11, 0);
        let n = 1_000_000;
        let xs: Vec<f64> = (0..n).map(|_| laplace_sample(1.0, &mut rng).unwrap()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        assert!(mean.abs() <= 0.01, "mean {mean}");
        assert!((1.96..=2.04).contains(&var), "var {var}");
        let tail = xs.iter().filter(|x| x.abs() > 2f64.ln()).count() as f64 / n as f64;
        assert!((tail - 0.5).abs() < 0.005, "tail {tail}");
        assert!(laplace_sample(0.0, &mut rng).is_err());
    }

    #[test]
    fn exponential_mechanism_examples() {
        let mut rng = stream(12, 0);
        let mut freq = [0usize; 4];
        for _ in 0..100_000 {
            freq[exponential_mechanism(&[0.3; 4], 1.0, 1.0, &mut rng).unwrap()] += 1;
        }
        for f in freq {
            let f = f as f64 / 1e5;
            assert!((0.24..=0.26).contains(&f));
        }

        let scores = [0.0, 1.0, 2.0, 3.0];
        let p = exponential_probabilities(&scores, 1.0, 1.0).unwrap();
        let raw: Vec<f64> = (0..4).map(|i| (0.5 * i as f64).exp()).collect();
        let z: f64 = raw.iter().sum();
        for (a, b) in p.iter().zip(&raw) {
            assert!((a - b / z).abs() < 1e-12);
        }
        let mut freq = [0usize; 4];
        for _ in 0..100_000 {
            freq[exponential_mechanism(&scores, 1.0, 1.0, &mut rng).unwrap()] += 1;
        }
        let l1: f64 = freq.iter().zip(&p).map(|(&f, q)| (f as f64 / 1e5 - q).abs()).sum();
        assert!(l1 <= 0.01, "l1 {l1}");

        let hits = (0..10_000)
            .filter(|_| exponential_mechanism(&scores, 1e4, 1.0, &mut rng).unwrap() == 3)
            .count();
        assert!(hits as f64 / 1e4 >= 0.999);
        assert!(exponential_mechanism(&[], 1.0, 1.0, &mut rng).is_err());
        assert_eq!(
            *select(&["a", "bb"], |s| s.len() as f64, 1e4, 1.0, &mut rng).unwrap(),
            "bb"
        );
    }

    #[test]
    fn multiplicative_update_examples() {
        let d = Arc::new(Domain::unit_grid(2).unwrap());
        let u = Dist::uniform(d.clone());
        let q = BitSet::from_bools(&[true, false]);
        let out = multiplicative_update(&u, &q, 0.7, 0.7).unwrap();
        assert_eq!(out.weights(), u.weights());
        let out = multiplicative_update(&u, &q, 2.0 * 2f64.ln(), 0.0).unwrap();
        assert!((out.weights()[0] - 2.0 / 3.0).abs() < 1e-12);
        let out = multiplicative_update(&u, &BitSet::ones(2), 3.0, 0.0).unwrap();
        assert!((out.weights()[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn advanced_composition_examples() {
        let p = advanced_composition(0.1, 100, 1e-6).unwrap();
        let expect = 0.1 * (200.0 * 1e6f64.ln()).sqrt() + 10.0 * 0.1f64.exp_m1();
        assert!((p.epsilon() - expect).abs() < 1e-12);
        assert!((p.epsilon() - 6.31).abs() < 0.01);
        let one = advanced_composition(0.5, 1, 1e-3).unwrap().epsilon();
        assert!((one - (0.5 * (2.0 * 1e3f64.ln()).sqrt() + 0.5 * 0.5f64.exp_m1())).abs() < 1e-12);
        assert!(advanced_composition(0.1, 100, 1e-9).unwrap().epsilon() > p.epsilon());
        assert!(PrivacyParams::new(0.0, 0.0).is_err());
        assert!(PrivacyParams::new(1.0, 1.0).is_err());
    }
}
