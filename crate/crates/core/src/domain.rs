//! Finite instance spaces, probability vectors over them, smoothness, query
//! evaluation and sampling.
//!
//! Continuous instance spaces are represented by finite discretizations whose
//! uniform measure is the counting measure, so a σ-smooth distribution is one
//! whose every weight is at most `1 / (σ N)`.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits::BitSet;
use crate::error::{Error, Result};

/// Additive tolerance for normalization and smoothness checks.
pub const MASS_TOL: f64 = 1e-12;

/// A finite ordered set of atoms, optionally embedded in ℝ^m.
///
/// A labeled domain (𝒳×𝒴) has `2N` atoms: atom `2i` is `(x_i, -1)` and atom
/// `2i + 1` is `(x_i, +1)`, where `x_i` is atom `i` of the base domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    ids: Vec<u64>,
    dim: usize,
    coords: Option<Vec<f64>>,
    base: Option<Arc<Domain>>,
}

impl Domain {
    pub fn new(ids: Vec<u64>, points: Option<Vec<Vec<f64>>>) -> Result<Self> {
        if ids.is_empty() {
            return Err(Error::Empty("domain atoms"));
        }
        let mut seen = HashSet::with_capacity(ids.len());
        for id in &ids {
            if !seen.insert(*id) {
                return Err(Error::param("ids", format!("duplicate atom id {id}")));
            }
        }
        let (dim, coords) = match points {
            None => (0, None),
            Some(points) => {
                if points.len() != ids.len() {
                    return Err(Error::LengthMismatch {
                        expected: ids.len(),
                        actual: points.len(),
                    });
                }
                let dim = points[0].len();
                if dim == 0 {
                    return Err(Error::param("embedding", "dimension must be at least 1"));
                }
                let mut flat = Vec::with_capacity(dim * points.len());
                for p in &points {
                    if p.len() != dim {
                        return Err(Error::param(
                            "embedding",
                            format!("mixed dimensions {dim} and {}", p.len()),
                        ));
                    }
                    if p.iter().any(|v| !v.is_finite()) {
                        return Err(Error::param("embedding", "non-finite coordinate"));
                    }
                    flat.extend_from_slice(p);
                }
                (dim, Some(flat))
            }
        };
        Ok(Self {
            ids,
            dim,
            coords,
            base: None,
        })
    }

    /// Embedded points with ids `0..N`.
    pub fn from_points(points: Vec<Vec<f64>>) -> Result<Self> {
        let ids = (0..points.len() as u64).collect();
        Self::new(ids, Some(points))
    }

    /// Atoms without geometry.
    pub fn abstract_atoms(n: usize) -> Result<Self> {
        Self::new((0..n as u64).collect(), None)
    }

    /// `n` cell midpoints of `[lo, hi]`: `lo + (i + 1/2)(hi - lo)/n`.
    pub fn grid(n: usize, lo: f64, hi: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Empty("domain atoms"));
        }
        if !(hi > lo) {
            return Err(Error::param("grid", format!("need lo < hi, got [{lo}, {hi}]")));
        }
        let width = (hi - lo) / n as f64;
        Self::from_points((0..n).map(|i| vec![lo + (i as f64 + 0.5) * width]).collect())
    }

    /// Uniform discretization of `[0, 1]`.
    pub fn unit_grid(n: usize) -> Result<Self> {
        Self::grid(n, 0.0, 1.0)
    }

    /// The product domain 𝒳×{−1,+1}.
    pub fn labeled(base: &Arc<Domain>) -> Self {
        let n = base.len();
        let ids = (0..2 * n as u64).collect();
        let coords = base.coords.as_ref().map(|c| {
            let mut out = Vec::with_capacity(2 * c.len());
            for i in 0..n {
                let p = &c[i * base.dim..(i + 1) * base.dim];
                out.extend_from_slice(p);
                out.extend_from_slice(p);
            }
            out
        });
        Self {
            ids,
            dim: base.dim,
            coords,
            base: Some(Arc::clone(base)),
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Embedding dimension; zero when the domain carries no geometry.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn has_embedding(&self) -> bool {
        self.coords.is_some()
    }

    pub fn id(&self, atom: usize) -> u64 {
        self.ids[atom]
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    pub fn point(&self, atom: usize) -> Option<&[f64]> {
        self.coords.as_ref().map(|c| &c[atom * self.dim..(atom + 1) * self.dim])
    }

    /// First coordinate of an atom, for one-dimensional domains.
    pub fn coord(&self, atom: usize) -> Option<f64> {
        self.point(atom).map(|p| p[0])
    }

    /// Base domain when this is a labeled product domain.
    pub fn base(&self) -> Option<&Arc<Domain>> {
        self.base.as_ref()
    }

    pub fn is_labeled(&self) -> bool {
        self.base.is_some()
    }

    /// Product-domain atom for `(x, y)`.
    pub fn labeled_atom(x: usize, y: i8) -> usize {
        2 * x + usize::from(y > 0)
    }

    /// `(x, y)` for a product-domain atom.
    pub fn split_labeled(atom: usize) -> (usize, i8) {
        (atom / 2, if atom % 2 == 1 { 1 } else { -1 })
    }

    /// Atom indices sorted by the given coordinate, ties by index.
    pub fn order_by_axis(&self, axis: usize) -> Result<Vec<usize>> {
        let coords = self
            .coords
            .as_ref()
            .ok_or_else(|| Error::MissingEmbedding("axis ordering".into()))?;
        if axis >= self.dim {
            return Err(Error::param(
                "axis",
                format!("axis {axis} out of range for dimension {}", self.dim),
            ));
        }
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| {
            coords[a * self.dim + axis]
                .total_cmp(&coords[b * self.dim + axis])
                .then(a.cmp(&b))
        });
        Ok(order)
    }
}

/// Smoothness parameter σ ∈ (0, 1].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct SmoothnessParam(f64);

impl SmoothnessParam {
    pub fn new(sigma: f64) -> Result<Self> {
        if sigma > 0.0 && sigma <= 1.0 {
            Ok(Self(sigma))
        } else {
            Err(Error::param("sigma", format!("must lie in (0, 1], got {sigma}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Largest weight a σ-smooth distribution may place on one of `n` atoms.
    pub fn cap(self, n: usize) -> f64 {
        1.0 / (self.0 * n as f64)
    }
}

/// A probability vector over a [`Domain`].
#[derive(Debug, Clone, PartialEq)]
pub struct Dist {
    domain: Arc<Domain>,
    weights: Vec<f64>,
}

impl Dist {
    /// Validates the weights and renormalizes when their sum drifts by more
    /// than [`MASS_TOL`].
    pub fn new(domain: Arc<Domain>, weights: Vec<f64>) -> Result<Self> {
        let sum = Self::check_weights(&domain, &weights)?;
        if (sum - 1.0).abs() > MASS_TOL {
            return Ok(Self::divide(domain, weights, sum));
        }
        Ok(Self { domain, weights })
    }

    /// Always divides by the total mass.
    pub fn from_unnormalized(domain: Arc<Domain>, weights: Vec<f64>) -> Result<Self> {
        let sum = Self::check_weights(&domain, &weights)?;
        Ok(Self::divide(domain, weights, sum))
    }

    fn divide(domain: Arc<Domain>, mut weights: Vec<f64>, sum: f64) -> Self {
        for w in &mut weights {
            *w /= sum;
        }
        Self { domain, weights }
    }

    fn check_weights(domain: &Domain, weights: &[f64]) -> Result<f64> {
        if weights.len() != domain.len() {
            return Err(Error::LengthMismatch {
                expected: domain.len(),
                actual: weights.len(),
            });
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::param("weights", format!("invalid weight {w}")));
        }
        let sum: f64 = weights.iter().sum();
        if !(sum > 0.0) {
            return Err(Error::param("weights", "total mass must be positive"));
        }
        Ok(sum)
    }

    pub fn uniform(domain: Arc<Domain>) -> Self {
        let n = domain.len();
        Self {
            weights: vec![1.0 / n as f64; n],
            domain,
        }
    }

    pub fn point_mass(domain: Arc<Domain>, atom: usize) -> Result<Self> {
        if atom >= domain.len() {
            return Err(Error::param("atom", format!("{atom} out of range")));
        }
        let mut weights = vec![0.0; domain.len()];
        weights[atom] = 1.0;
        Ok(Self { domain, weights })
    }

    /// Uniform over the listed atoms.
    pub fn uniform_on(domain: Arc<Domain>, atoms: &[usize]) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::Empty("support"));
        }
        let mut weights = vec![0.0; domain.len()];
        for &a in atoms {
            if a >= domain.len() {
                return Err(Error::param("atom", format!("{a} out of range")));
            }
            weights[a] += 1.0;
        }
        Self::from_unnormalized(domain, weights)
    }

    /// `alpha * a + (1 - alpha) * b`.
    pub fn mixture(a: &Dist, b: &Dist, alpha: f64) -> Result<Self> {
        a.check_same_domain(b)?;
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::param("alpha", format!("must lie in [0, 1], got {alpha}")));
        }
        let weights = a
            .weights
            .iter()
            .zip(&b.weights)
            .map(|(x, y)| alpha * x + (1.0 - alpha) * y)
            .collect();
        Self::new(Arc::clone(&a.domain), weights)
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn max_weight(&self) -> f64 {
        self.weights.iter().copied().fold(0.0, f64::max)
    }

    pub fn check_same_domain(&self, other: &Dist) -> Result<()> {
        same_domain(&self.domain, &other.domain)
    }

    /// D_KL(self ‖ other), with `0 log 0 = 0`; infinite when `self` is not
    /// absolutely continuous with respect to `other`.
    pub fn kl_divergence(&self, other: &Dist) -> Result<f64> {
        self.check_same_domain(other)?;
        Ok(kl(&self.weights, &other.weights))
    }

    pub fn total_variation(&self, other: &Dist) -> Result<f64> {
        self.check_same_domain(other)?;
        Ok(0.5
            * self
                .weights
                .iter()
                .zip(&other.weights)
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>())
    }

    /// Marginal over the base domain of a labeled product distribution.
    pub fn marginal(&self) -> Result<Dist> {
        let base = self
            .domain
            .base()
            .ok_or_else(|| Error::DomainMismatch("marginal of an unlabeled domain".into()))?;
        let weights = self.weights.chunks(2).map(|c| c[0] + c[1]).collect();
        Dist::new(Arc::clone(base), weights)
    }
}

pub(crate) fn kl(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .map(|(&a, &b)| {
            if a == 0.0 {
                0.0
            } else if b == 0.0 {
                f64::INFINITY
            } else {
                a * (a / b).ln()
            }
        })
        .sum()
}

pub(crate) fn same_domain(a: &Arc<Domain>, b: &Arc<Domain>) -> Result<()> {
    if Arc::ptr_eq(a, b) || **a == **b {
        Ok(())
    } else {
        Err(Error::DomainMismatch(format!(
            "domains of size {} and {} differ",
            a.len(),
            b.len()
        )))
    }
}

/// A multiset of atoms of a domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    domain: Arc<Domain>,
    records: Vec<usize>,
}

impl Dataset {
    pub fn new(domain: Arc<Domain>, records: Vec<usize>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::Empty("dataset records"));
        }
        if let Some(r) = records.iter().find(|&&r| r >= domain.len()) {
            return Err(Error::param("records", format!("atom {r} not in domain")));
        }
        Ok(Self { domain, records })
    }

    /// Builds a dataset from per-atom multiplicities.
    pub fn from_counts(domain: Arc<Domain>, counts: &[usize]) -> Result<Self> {
        if counts.len() != domain.len() {
            return Err(Error::LengthMismatch {
                expected: domain.len(),
                actual: counts.len(),
            });
        }
        let records = counts
            .iter()
            .enumerate()
            .flat_map(|(a, &c)| std::iter::repeat_n(a, c))
            .collect();
        Self::new(domain, records)
    }

    pub fn sample_iid<R: Rng + ?Sized>(dist: &Dist, n: usize, rng: &mut R) -> Result<Self> {
        let sampler = Sampler::new(dist);
        let records = (0..n).map(|_| sampler.sample(rng)).collect();
        Self::new(Arc::clone(dist.domain()), records)
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    pub fn records(&self) -> &[usize] {
        &self.records
    }

    pub fn n(&self) -> usize {
        self.records.len()
    }

    pub fn counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.domain.len()];
        for &r in &self.records {
            c[r] += 1;
        }
        c
    }

    /// The empirical distribution 𝒟_B.
    pub fn empirical(&self) -> Dist {
        let n = self.n() as f64;
        let weights = self.counts().into_iter().map(|c| c as f64 / n).collect();
        Dist {
            domain: Arc::clone(&self.domain),
            weights,
        }
    }

    /// Replaces record `index` by `atom`: the adjacent dataset.
    pub fn with_replaced(&self, index: usize, atom: usize) -> Result<Self> {
        if index >= self.records.len() {
            return Err(Error::param("index", format!("{index} out of range")));
        }
        let mut records = self.records.clone();
        records[index] = atom;
        Self::new(Arc::clone(&self.domain), records)
    }
}

/// `q(D) = Σ_x D(x) q(x)` for a {0,1}-valued query.
pub fn query_value(query: &BitSet, dist: &Dist) -> Result<f64> {
    if query.len() != dist.len() {
        return Err(Error::DomainMismatch(format!(
            "query over {} atoms evaluated on a distribution over {}",
            query.len(),
            dist.len()
        )));
    }
    Ok(query.weighted_count(dist.weights()))
}

/// True iff every weight is at most `1/(σN) + 1e-12`.
pub fn is_sigma_smooth(dist: &Dist, sigma: SmoothnessParam) -> bool {
    dist.max_weight() <= sigma.cap(dist.len()) + MASS_TOL
}

pub fn check_sigma_smooth(dist: &Dist, sigma: SmoothnessParam) -> Result<()> {
    if is_sigma_smooth(dist, sigma) {
        Ok(())
    } else {
        Err(Error::NotSmooth {
            sigma: sigma.value(),
            max_weight: dist.max_weight(),
            cap: sigma.cap(dist.len()),
        })
    }
}

/// Draws one atom from `dist`.
pub fn sample<R: Rng + ?Sized>(dist: &Dist, rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &w) in dist.weights().iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last = i;
            if u < acc {
                return i;
            }
        }
    }
    last
}

/// Repeated sampling from a fixed distribution by binary search on the CDF.
/// Consumes one uniform per draw, like [`sample`], and returns the same atoms
/// up to floating-point ties.
#[derive(Debug, Clone)]
pub struct Sampler {
    cdf: Vec<f64>,
    atoms: Vec<usize>,
}

impl Sampler {
    pub fn new(dist: &Dist) -> Self {
        let mut cdf = Vec::new();
        let mut atoms = Vec::new();
        let mut acc = 0.0;
        for (i, &w) in dist.weights().iter().enumerate() {
            if w > 0.0 {
                acc += w;
                cdf.push(acc);
                atoms.push(i);
            }
        }
        Self { cdf, atoms }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        let k = self.cdf.partition_point(|&c| c <= u);
        self.atoms[k.min(self.atoms.len() - 1)]
    }
}

/// Line-oriented text form: `N=<int> m=<int>` then `id coord_1 .. coord_m weight`
/// per atom, reals at 17 significant digits.
pub fn dist_to_text(dist: &Dist) -> String {
    let d = dist.domain();
    let mut out = format!("N={} m={}\n", d.len(), d.dim());
    for (i, w) in dist.weights().iter().enumerate() {
        let _ = write!(out, "{}", d.id(i));
        if let Some(p) = d.point(i) {
            for c in p {
                let _ = write!(out, " {c:.16e}");
            }
        }
        let _ = writeln!(out, " {w:.16e}");
    }
    out
}

pub fn dist_from_text(text: &str) -> Result<Dist> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or(Error::Empty("distribution text"))?;
    let mut n = None;
    let mut m = None;
    for tok in header.split_whitespace() {
        match tok.split_once('=') {
            Some(("N", v)) => n = Some(parse_num::<usize>(v)?),
            Some(("m", v)) => m = Some(parse_num::<usize>(v)?),
            _ => return Err(Error::Parse(format!("bad header token `{tok}`"))),
        }
    }
    let (n, m) = match (n, m) {
        (Some(n), Some(m)) => (n, m),
        _ => return Err(Error::Parse("header must be `N=<int> m=<int>`".into())),
    };
    let mut ids = Vec::with_capacity(n);
    let mut points = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for line in lines {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != m + 2 {
            return Err(Error::Parse(format!(
                "expected {} fields, got {} in `{line}`",
                m + 2,
                toks.len()
            )));
        }
        ids.push(parse_num::<u64>(toks[0])?);
        points.push(
            toks[1..=m]
                .iter()
                .map(|t| parse_num::<f64>(t))
                .collect::<Result<Vec<_>>>()?,
        );
        weights.push(parse_num::<f64>(toks[m + 1])?);
    }
    if ids.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: ids.len(),
        });
    }
    let domain = Domain::new(ids, (m > 0).then_some(points))?;
    Dist::new(Arc::new(domain), weights)
}

pub(crate) fn parse_num<T: std::str::FromStr>(s: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    s.trim().parse::<T>().map_err(|e| Error::Parse(format!("`{s}`: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dom(n: usize) -> Arc<Domain> {
        Arc::new(Domain::unit_grid(n).unwrap())
    }

    #[test]
    fn domain_rejects_duplicates_and_ragged_embeddings() {
        assert!(Domain::new(vec![1, 1], None).is_err());
        assert!(Domain::new(vec![], None).is_err());
        assert!(Domain::new(vec![0, 1], Some(vec![vec![0.0], vec![0.0, 1.0]])).is_err());
    }

    #[test]
    fn query_value_examples() {
        let d = dom(4);
        let dist = Dist::new(Arc::clone(&d), vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        assert_eq!(query_value(&BitSet::ones(4), &dist).unwrap(), 1.0);
        assert_eq!(query_value(&BitSet::zeros(4), &dist).unwrap(), 0.0);
        let q = BitSet::from_bools(&[false, true, false, true]);
        assert!((query_value(&q, &dist).unwrap() - 0.6).abs() < 1e-15);
        assert!(query_value(&BitSet::ones(5), &dist).is_err());
    }

    #[test]
    fn smoothness_examples() {
        let d = dom(10);
        let half = SmoothnessParam::new(0.5).unwrap();
        assert!(is_sigma_smooth(&Dist::uniform(Arc::clone(&d)), half));
        assert!(!is_sigma_smooth(&Dist::point_mass(Arc::clone(&d), 3).unwrap(), half));
        let d4 = dom(4);
        let two = Dist::new(d4, vec![0.5, 0.5, 0.0, 0.0]).unwrap();
        assert!(is_sigma_smooth(&two, half));
        assert!(SmoothnessParam::new(0.0).is_err());
        assert!(SmoothnessParam::new(1.5).is_err());
    }

    #[test]
    fn sampling_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let d = dom(5);
        let pm = Dist::point_mass(Arc::clone(&d), 3).unwrap();
        assert!((0..1000).all(|_| sample(&pm, &mut rng) == 3));

        let d2 = dom(2);
        let u = Dist::uniform(d2);
        let hits = (0..100_000).filter(|_| sample(&u, &mut rng) == 0).count();
        let f = hits as f64 / 100_000.0;
        assert!((0.49..=0.51).contains(&f), "frequency {f}");

        let mut a = ChaCha8Rng::seed_from_u64(99);
        let mut b = ChaCha8Rng::seed_from_u64(99);
        let dist = Dist::new(d, vec![0.1, 0.2, 0.3, 0.2, 0.2]).unwrap();
        let xs: Vec<usize> = (0..200).map(|_| sample(&dist, &mut a)).collect();
        let ys: Vec<usize> = (0..200).map(|_| sample(&dist, &mut b)).collect();
        assert_eq!(xs, ys);
    }

    #[test]
    fn sampler_agrees_with_linear_scan() {
        let d = dom(6);
        let dist = Dist::new(d, vec![0.0, 0.25, 0.0, 0.5, 0.25, 0.0]).unwrap();
        let s = Sampler::new(&dist);
        let mut a = ChaCha8Rng::seed_from_u64(3);
        let mut b = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            assert_eq!(s.sample(&mut a), sample(&dist, &mut b));
        }
    }

    #[test]
    fn renormalizes_drift() {
        let d = dom(3);
        let dist = Dist::new(d, vec![1.0, 1.0, 2.0]).unwrap();
        assert_eq!(dist.weights(), &[0.25, 0.25, 0.5]);
    }

    #[test]
    fn labeled_domain_layout() {
        let base = dom(3);
        let lab = Arc::new(Domain::labeled(&base));
        assert_eq!(lab.len(), 6);
        assert_eq!(Domain::labeled_atom(2, 1), 5);
        assert_eq!(Domain::split_labeled(4), (2, -1));
        assert_eq!(lab.point(5), base.point(2));
        let joint = Dist::uniform(Arc::clone(&lab));
        let marg = joint.marginal().unwrap();
        assert!((marg.weights()[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn text_round_trip_is_bit_exact() {
        let d = Arc::new(Domain::from_points(vec![vec![0.1, -3.5], vec![1.0 / 3.0, 2e-300], vec![7.0, 0.0]]).unwrap());
        let dist = Dist::from_unnormalized(d, vec![1.0, 3.0, 7.0]).unwrap();
        let text = dist_to_text(&dist);
        assert!(text.starts_with("N=3 m=2\n"));
        let back = dist_from_text(&text).unwrap();
        assert_eq!(back, dist);
    }

    proptest! {
        #[test]
        fn constructed_dists_are_normalized(ws in proptest::collection::vec(0.0f64..10.0, 1..40)) {
            prop_assume!(ws.iter().sum::<f64>() > 0.0);
            let d = dom(ws.len());
            let dist = Dist::new(d, ws).unwrap();
            let s: f64 = dist.weights().iter().sum();
            prop_assert!((s - 1.0).abs() <= MASS_TOL);
            prop_assert!(dist.weights().iter().all(|&w| w >= 0.0));
        }

        #[test]
        fn uniform_is_smooth_for_every_sigma(n in 1usize..500, sigma in 1e-6f64..=1.0) {
            let d = dom(n);
            prop_assert!(is_sigma_smooth(&Dist::uniform(d), SmoothnessParam::new(sigma).unwrap()));
        }

        #[test]
        fn query_value_is_linear(
            a in proptest::collection::vec(0.01f64..1.0, 12),
            b in proptest::collection::vec(0.01f64..1.0, 12),
            bits in proptest::collection::vec(any::<bool>(), 12),
            alpha in 0.0f64..=1.0,
        ) {
            let d = dom(12);
            let d1 = Dist::new(Arc::clone(&d), a).unwrap();
            let d2 = Dist::new(d, b).unwrap();
            let q = BitSet::from_bools(&bits);
            let mix = Dist::mixture(&d1, &d2, alpha).unwrap();
            let lhs = query_value(&q, &mix).unwrap();
            let rhs = alpha * query_value(&q, &d1).unwrap() + (1.0 - alpha) * query_value(&q, &d2).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12);
        }

        #[test]
        fn text_round_trip(ws in proptest::collection::vec(0.0f64..1e3, 1..30)) {
            prop_assume!(ws.iter().sum::<f64>() > 0.0);
            let d = dom(ws.len());
            let dist = Dist::from_unnormalized(d, ws).unwrap();
            prop_assert_eq!(dist_from_text(&dist_to_text(&dist)).unwrap(), dist);
        }
    }
}
