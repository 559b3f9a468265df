use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;

use super::primitives::{exponential_mechanism, exponential_probabilities};
use crate::bits::BitSet;
use crate::domain::Dataset;
use crate::error::{Error, Result};
use crate::hypothesis::binomial;

/// Most candidate datasets the mechanism will enumerate.
pub const ENUMERATION_LIMIT: u128 = 10_000_000;

/// `⌈8d/γ²⌉` records for a class of VC dimension `d`.
pub fn default_net_size(vc_dim: usize, gamma: f64) -> Result<usize> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::param("gamma", format!("must lie in (0, 1], got {gamma}")));
    }
    Ok((8.0 * vc_dim.max(1) as f64 / (gamma * gamma)).ceil() as usize)
}

/// Number of size-`k` multisets over `m` symbols.
pub fn multiset_count(m: usize, k: usize) -> u128 {
    if m == 0 {
        return u128::from(k == 0);
    }
    binomial(m + k - 1, k)
}

/// All nondecreasing length-`k` sequences over `support`.
pub fn enumerate_multisets(support: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(support: &[usize], start: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..support.len() {
            cur.push(support[i]);
            rec(support, i, k, cur, out);
            cur.pop();
        }
    }
    rec(support, 0, k, &mut cur, &mut out);
    out
}

/// `max_q |q(B) − q(B′)|` for every candidate `B′`.
pub fn net_scores(data: &Dataset, queries: &[BitSet], candidates: &[Vec<usize>]) -> Result<Vec<f64>> {
    if queries.is_empty() {
        return Err(Error::Empty("queries"));
    }
    let n = data.n() as f64;
    let truth: Vec<f64> = queries
        .iter()
        .map(|q| data.records().iter().filter(|&&r| q.get(r)).count() as f64 / n)
        .collect();
    Ok(candidates
        .iter()
        .map(|c| {
            let k = c.len() as f64;
            queries
                .iter()
                .zip(&truth)
                .map(|(q, t)| (c.iter().filter(|&&r| q.get(r)).count() as f64 / k - t).abs())
                .fold(0.0, f64::max)
        })
        .collect())
}

fn check_args(data: &Dataset, queries: &[BitSet], eps: f64, m: usize, k: usize) -> Result<()> {
    if m == 0 || k == 0 {
        return Err(Error::param("M, k", "need M ≥ 1 and k ≥ 1"));
    }
    if !(eps > 0.0) {
        return Err(Error::param("epsilon", format!("must be positive, got {eps}")));
    }
    if let Some(q) = queries.iter().find(|q| q.len() != data.domain().len()) {
        return Err(Error::LengthMismatch {
            expected: data.domain().len(),
            actual: q.len(),
        });
    }
    let count = multiset_count(m, k);
    if count > ENUMERATION_LIMIT {
        return Err(Error::EnumerationTooLarge {
            count,
            limit: ENUMERATION_LIMIT,
        });
    }
    Ok(())
}

/// Exponential-mechanism probabilities over the multisets supported on the
/// distinct atoms of `support`.
fn conditional(
    data: &Dataset,
    queries: &[BitSet],
    eps: f64,
    support: &[usize],
    k: usize,
) -> Result<(Vec<Vec<usize>>, Vec<f64>)> {
    let candidates = enumerate_multisets(support, k);
    let scores: Vec<f64> = net_scores(data, queries, &candidates)?
        .into_iter()
        .map(|s| -s)
        .collect();
    let p = exponential_probabilities(&scores, eps, 1.0 / data.n() as f64)?;
    Ok((candidates, p))
}

fn distinct(mut v: Vec<usize>) -> Vec<usize> {
    v.sort_unstable();
    v.dedup();
    v
}

/// Samples `M` atoms with replacement, then picks a size-`k` dataset on them
/// with probability `∝ exp(−ε·n·s/2)`.
pub fn subsampled_net_mechanism<R: Rng + ?Sized>(
    data: &Dataset,
    queries: &[BitSet],
    eps: f64,
    m: usize,
    k: usize,
    rng: &mut R,
) -> Result<Dataset> {
    check_args(data, queries, eps, m, k)?;
    let n_atoms = data.domain().len();
    let support = distinct((0..m).map(|_| rng.gen_range(0..n_atoms)).collect());
    let candidates = enumerate_multisets(&support, k);
    let scores: Vec<f64> = net_scores(data, queries, &candidates)?
        .into_iter()
        .map(|s| -s)
        .collect();
    let i = exponential_mechanism(&scores, eps, 1.0 / data.n() as f64, rng)?;
    Dataset::new(Arc::clone(data.domain()), candidates[i].clone())
}

/// Exact output law of [`subsampled_net_mechanism`], keyed by the sorted
/// records of the released dataset. Sums over all `N^M` draws of `V`.
pub fn net_output_distribution(
    data: &Dataset,
    queries: &[BitSet],
    eps: f64,
    m: usize,
    k: usize,
) -> Result<BTreeMap<Vec<usize>, f64>> {
    check_args(data, queries, eps, m, k)?;
    let n_atoms = data.domain().len();
    let draws = (n_atoms as u128).checked_pow(m as u32).unwrap_or(u128::MAX);
    if draws > ENUMERATION_LIMIT {
        return Err(Error::EnumerationTooLarge {
            count: draws,
            limit: ENUMERATION_LIMIT,
        });
    }
    // Weight of each distinct support among the N^M equally likely draws.
    let mut supports: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
    let mut seq = vec![0usize; m];
    let unit = 1.0 / draws as f64;
    loop {
        *supports.entry(distinct(seq.clone())).or_default() += unit;
        let mut i = 0;
        while i < m && seq[i] + 1 == n_atoms {
            seq[i] = 0;
            i += 1;
        }
        if i == m {
            break;
        }
        seq[i] += 1;
    }
    let mut out: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
    for (support, weight) in supports {
        let (candidates, p) = conditional(data, queries, eps, &support, k)?;
        for (c, pc) in candidates.into_iter().zip(p) {
            *out.entry(c).or_default() += weight * pc;
        }
    }
    Ok(out)
}

/// `max_o max(P(o)/P̃(o), P̃(o)/P(o))` over outputs of either law.
pub fn max_probability_ratio(a: &BTreeMap<Vec<usize>, f64>, b: &BTreeMap<Vec<usize>, f64>) -> f64 {
    let mut worst: f64 = 1.0;
    for key in a.keys().chain(b.keys()) {
        let pa = a.get(key).copied().unwrap_or(0.0);
        let pb = b.get(key).copied().unwrap_or(0.0);
        if pa == 0.0 && pb == 0.0 {
            continue;
        }
        worst = worst.max(pa / pb).max(pb / pa);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Domain;
    use crate::hypothesis::evenly_spaced_thresholds;
    use crate::rng::stream;

    fn thresholds(d: &Domain, k: usize) -> Vec<BitSet> {
        evenly_spaced_thresholds(d, k)
            .unwrap()
            .iter()
            .map(|h| h.materialize(d).unwrap())
            .collect()
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(enumerate_multisets(&[1, 4, 7], 2).len() as u128, multiset_count(3, 2));
        assert_eq!(multiset_count(4, 3), 20);
        assert_eq!(default_net_size(1, 0.5).unwrap(), 32);
    }

    #[test]
    fn guard_rejects_huge_enumeration() {
        let d = Arc::new(Domain::unit_grid(100).unwrap());
        let data = Dataset::new(d.clone(), vec![1, 2]).unwrap();
        let err = subsampled_net_mechanism(&data, &thresholds(&d, 4), 1.0, 100, 20, &mut stream(0, 0));
        assert!(matches!(err, Err(Error::EnumerationTooLarge { .. })));
    }

    #[test]
    fn all_ones_query_is_uniform() {
        let d = Arc::new(Domain::unit_grid(6).unwrap());
        let data = Dataset::new(d.clone(), vec![0, 1, 1]).unwrap();
        let (_, p) = conditional(&data, &[BitSet::ones(6)], 1.0, &[0, 2, 5], 2).unwrap();
        assert!(p.iter().all(|&x| (x - 1.0 / 6.0).abs() < 1e-12));
    }

    #[test]
    fn huge_epsilon_finds_optimum() {
        let d = Arc::new(Domain::unit_grid(16).unwrap());
        let qs = thresholds(&d, 8);
        let mut rng = stream(7, 0);
        let data = Dataset::new(d.clone(), vec![1, 3, 3, 8, 12, 15]).unwrap();
        for _ in 0..20 {
            let mut replay = rng.clone();
            let support = distinct((0..8).map(|_| replay.gen_range(0..16)).collect());
            let candidates = enumerate_multisets(&support, 6);
            let best = net_scores(&data, &qs, &candidates)
                .unwrap()
                .into_iter()
                .fold(f64::INFINITY, f64::min);
            let out = subsampled_net_mechanism(&data, &qs, 1e4, 8, 6, &mut rng).unwrap();
            let s = net_scores(&data, &qs, &[out.records().to_vec()]).unwrap()[0];
            assert!(s <= best + 1e-9, "{s} vs {best}");
        }
    }

    #[test]
    fn exact_privacy_ratio() {
        let d = Arc::new(Domain::unit_grid(8).unwrap());
        let qs = thresholds(&d, 4);
        let b = Dataset::new(d.clone(), vec![0, 2, 2, 5, 7]).unwrap();
        let b2 = b.with_replaced(1, 6).unwrap();
        for eps in [0.5, 1.0, 2.0] {
            let p = net_output_distribution(&b, &qs, eps, 4, 3).unwrap();
            let p2 = net_output_distribution(&b2, &qs, eps, 4, 3).unwrap();
            let total: f64 = p.values().sum();
            assert!((total - 1.0).abs() < 1e-9);
            assert!(max_probability_ratio(&p, &p2) <= eps.exp() * (1.0 + 1e-9));
        }
    }
}
