//! Hypothesis families over finite domains.
//!
//! A [`Hypothesis`] maps atoms to {−1, +1}; its {0, 1} view (`+1 ↦ 1`) is the
//! query used for distribution evaluation. Ties on decision boundaries resolve
//! to +1 everywhere.

mod embed;
mod lp;
mod oracle;
mod token;

use serde::{Deserialize, Serialize};

use crate::bits::BitSet;
use crate::domain::Domain;
use crate::error::{Error, Result};

pub(crate) use embed::binomial;
pub use embed::{monomial_count, monomial_embed};
pub use oracle::{consistency_oracle, realized_labelings, realized_witnesses, ConsistencyOracle, Labeling};

/// Largest domain for which composed hypotheses are materialized eagerly.
pub const MATERIALIZE_LIMIT: usize = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SetOp {
    Intersection,
    Union,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Hypothesis {
    Constant(bool),
    /// +1 iff `x[axis] ≥ b`.
    Threshold {
        axis: usize,
        b: f64,
    },
    /// +1 iff the first coordinate lies in some half-open `[a, b)`.
    Intervals(Vec<(f64, f64)>),
    /// `sign(⟨w, x⟩ − c)`.
    Halfspace {
        w: Vec<f64>,
        c: f64,
    },
    /// A halfspace over the degree-`degree` monomial embedding of `x`.
    PolyThreshold {
        degree: usize,
        w: Vec<f64>,
        c: f64,
    },
    Not(Box<Hypothesis>),
    And(Vec<Hypothesis>),
    Or(Vec<Hypothesis>),
    Xor(Box<Hypothesis>, Box<Hypothesis>),
    /// Extensional form over a specific domain.
    Table(BitSet),
}

impl Hypothesis {
    pub fn threshold(b: f64) -> Self {
        Hypothesis::Threshold { axis: 0, b }
    }

    pub fn complement(self) -> Self {
        match self {
            Hypothesis::Not(inner) => *inner,
            Hypothesis::Constant(v) => Hypothesis::Constant(!v),
            other => Hypothesis::Not(Box::new(other)),
        }
    }

    /// {0, 1} view at `atom`.
    pub fn indicator(&self, domain: &Domain, atom: usize) -> Result<bool> {
        Ok(match self {
            Hypothesis::Constant(v) => *v,
            Hypothesis::Threshold { axis, b } => {
                let p = point(domain, atom, "threshold1d")?;
                let x = *p.get(*axis).ok_or_else(|| {
                    Error::param("axis", format!("axis {axis} out of range for dimension {}", p.len()))
                })?;
                x >= *b
            }
            Hypothesis::Intervals(iv) => {
                let x = point(domain, atom, "interval_union")?[0];
                iv.iter().any(|&(a, b)| x >= a && x < b)
            }
            Hypothesis::Halfspace { w, c } => {
                let p = point(domain, atom, "halfspace")?;
                check_dim(w.len(), p.len())?;
                dot(w, p) - c >= 0.0
            }
            Hypothesis::PolyThreshold { degree, w, c } => {
                let p = point(domain, atom, "poly_threshold")?;
                let z = monomial_embed(p, *degree);
                check_dim(w.len(), z.len())?;
                dot(w, &z) - c >= 0.0
            }
            Hypothesis::Not(h) => !h.indicator(domain, atom)?,
            Hypothesis::And(parts) => {
                for h in parts {
                    if !h.indicator(domain, atom)? {
                        return Ok(false);
                    }
                }
                true
            }
            Hypothesis::Or(parts) => {
                for h in parts {
                    if h.indicator(domain, atom)? {
                        return Ok(true);
                    }
                }
                false
            }
            Hypothesis::Xor(a, b) => a.indicator(domain, atom)? != b.indicator(domain, atom)?,
            Hypothesis::Table(bits) => {
                if bits.len() != domain.len() {
                    return Err(Error::DomainMismatch(format!(
                        "table over {} atoms used on a domain of {}",
                        bits.len(),
                        domain.len()
                    )));
                }
                bits.get(atom)
            }
        })
    }

    /// Materializes the {0, 1} view on every atom.
    pub fn materialize(&self, domain: &Domain) -> Result<BitSet> {
        match self {
            Hypothesis::Table(bits) => {
                if bits.len() != domain.len() {
                    return Err(Error::DomainMismatch(format!(
                        "table over {} atoms used on a domain of {}",
                        bits.len(),
                        domain.len()
                    )));
                }
                Ok(bits.clone())
            }
            Hypothesis::Not(h) => Ok(h.materialize(domain)?.not()),
            Hypothesis::And(parts) | Hypothesis::Or(parts) => {
                if domain.len() > MATERIALIZE_LIMIT {
                    return Err(Error::param(
                        "domain",
                        format!("{} atoms exceeds the materialization limit", domain.len()),
                    ));
                }
                let and = matches!(self, Hypothesis::And(_));
                let mut acc = if and {
                    BitSet::ones(domain.len())
                } else {
                    BitSet::zeros(domain.len())
                };
                for h in parts {
                    let b = h.materialize(domain)?;
                    acc = if and { acc.and(&b)? } else { acc.or(&b)? };
                }
                Ok(acc)
            }
            Hypothesis::Xor(a, b) => a.materialize(domain)?.xor(&b.materialize(domain)?),
            _ => {
                let mut out = BitSet::zeros(domain.len());
                for i in 0..domain.len() {
                    if self.indicator(domain, i)? {
                        out.set(i, true);
                    }
                }
                Ok(out)
            }
        }
    }

    /// Error query `err_s(h) = 1(h(x) ≠ y)` over the labeled product domain.
    pub fn error_query(&self, labeled: &Domain) -> Result<BitSet> {
        let base = labeled
            .base()
            .ok_or_else(|| Error::DomainMismatch("error queries need a labeled domain".into()))?;
        let h = self.materialize(base)?;
        Ok(BitSet::from_fn(labeled.len(), |a| {
            let (x, y) = Domain::split_labeled(a);
            h.get(x) != (y > 0)
        }))
    }
}

/// Sign output `h(x) ∈ {−1, +1}`.
pub fn evaluate(h: &Hypothesis, domain: &Domain, atom: usize) -> Result<i8> {
    Ok(if h.indicator(domain, atom)? { 1 } else { -1 })
}

fn point<'a>(domain: &'a Domain, atom: usize, family: &str) -> Result<&'a [f64]> {
    if atom >= domain.len() {
        return Err(Error::param("atom", format!("{atom} out of range")));
    }
    domain
        .point(atom)
        .ok_or_else(|| Error::MissingEmbedding(family.to_string()))
}

fn check_dim(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::LengthMismatch { expected, actual });
    }
    Ok(())
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Family {
    Threshold1d,
    IntervalUnion { k: usize },
    Halfspace { dim: usize },
    PolyThreshold { n: usize, degree: usize },
    Complement(Box<HypothesisClass>),
    KFold { op: SetOp, parts: Vec<HypothesisClass> },
    SymDifference(Box<HypothesisClass>),
    Singleton(Hypothesis),
}

/// A hypothesis family with its declared VC dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisClass {
    family: Family,
    vc_dim: usize,
    vc_is_bound: bool,
}

impl HypothesisClass {
    pub fn threshold1d() -> Self {
        Self::exact(Family::Threshold1d, 1)
    }

    pub fn interval_union(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::param("k", "need at least one interval"));
        }
        Ok(Self::exact(Family::IntervalUnion { k }, 2 * k))
    }

    pub fn halfspace(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("dim", "need dimension at least 1"));
        }
        Ok(Self::exact(Family::Halfspace { dim }, dim + 1))
    }

    /// Degree-`degree` polynomial thresholds in `n` variables; the VC dimension
    /// is the number of monomials of degree ≤ `degree`, constant included.
    pub fn poly_threshold(n: usize, degree: usize) -> Result<Self> {
        if n == 0 || degree == 0 {
            return Err(Error::param("poly_threshold", "need n ≥ 1 and d ≥ 1"));
        }
        Ok(Self::exact(
            Family::PolyThreshold { n, degree },
            monomial_count(n, degree) + 1,
        ))
    }

    pub fn singleton(h: Hypothesis) -> Self {
        Self::exact(Family::Singleton(h), 1)
    }

    pub fn complement(base: HypothesisClass) -> Self {
        let (vc, bound) = (base.vc_dim, base.vc_is_bound);
        Self {
            family: Family::Complement(Box::new(base)),
            vc_dim: vc,
            vc_is_bound: bound,
        }
    }

    /// `{f Δ f' : f, f' ∈ base}`.
    pub fn sym_difference(base: HypothesisClass) -> Self {
        let vc = kfold_vc_bound(2, base.vc_dim);
        Self {
            family: Family::SymDifference(Box::new(base)),
            vc_dim: vc,
            vc_is_bound: true,
        }
    }

    fn exact(family: Family, vc_dim: usize) -> Self {
        Self {
            family,
            vc_dim,
            vc_is_bound: false,
        }
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn vc_dim(&self) -> usize {
        self.vc_dim
    }

    /// Whether `vc_dim` is an upper bound rather than the exact value.
    pub fn vc_is_bound(&self) -> bool {
        self.vc_is_bound
    }

    pub fn id(&self) -> String {
        token::class_to_token(self)
    }

    pub fn parse(token: &str) -> Result<Self> {
        token::class_from_token(token)
    }

    /// Every distinct hypothesis of the class restricted to `domain`, when the
    /// class is small enough to list; `None` otherwise.
    pub fn enumerate(&self, domain: &Domain, limit: usize) -> Result<Option<Vec<Hypothesis>>> {
        Ok(match &self.family {
            Family::Threshold1d => Some(threshold_grid(domain, 0)?),
            Family::Singleton(h) => Some(vec![h.clone()]),
            Family::Complement(base) => base
                .enumerate(domain, limit)?
                .map(|hs| hs.into_iter().map(Hypothesis::complement).collect()),
            Family::KFold { op, parts } => {
                let mut lists = Vec::new();
                let mut total: usize = 1;
                for p in parts {
                    match p.enumerate(domain, limit)? {
                        Some(l) => {
                            total = total.saturating_mul(l.len());
                            lists.push(l);
                        }
                        None => return Ok(None),
                    }
                }
                if total > limit {
                    return Ok(None);
                }
                let mut out = vec![Vec::new()];
                for l in &lists {
                    out = out
                        .into_iter()
                        .flat_map(|prefix| {
                            l.iter().map(move |h| {
                                let mut v = prefix.clone();
                                v.push(h.clone());
                                v
                            })
                        })
                        .collect();
                }
                Some(
                    out.into_iter()
                        .map(|hs| match op {
                            SetOp::Intersection => Hypothesis::And(hs),
                            SetOp::Union => Hypothesis::Or(hs),
                        })
                        .collect(),
                )
            }
            Family::SymDifference(base) => match base.enumerate(domain, limit)? {
                Some(l) if l.len().saturating_mul(l.len()) <= limit => {
                    let mut out = Vec::with_capacity(l.len() * l.len());
                    for a in &l {
                        for b in &l {
                            out.push(Hypothesis::Xor(Box::new(a.clone()), Box::new(b.clone())));
                        }
                    }
                    Some(out)
                }
                _ => None,
            },
            _ => None,
        })
    }
}

/// The `N + 1` distinct thresholds on `axis`: one per distinct coordinate plus
/// the all-negative threshold at `+∞`, in increasing `b`.
pub fn threshold_grid(domain: &Domain, axis: usize) -> Result<Vec<Hypothesis>> {
    let order = domain.order_by_axis(axis)?;
    let mut out = Vec::with_capacity(order.len() + 1);
    let mut last = f64::NEG_INFINITY;
    for a in order {
        let c = domain.point(a).expect("ordered domains are embedded")[axis];
        if c > last {
            out.push(Hypothesis::Threshold { axis, b: c });
            last = c;
        }
    }
    out.push(Hypothesis::Threshold { axis, b: f64::INFINITY });
    Ok(out)
}

/// `thresholds:K` query family: `K` thresholds at cuts `j·N/K`, `j = 0..K`.
pub fn evenly_spaced_thresholds(domain: &Domain, k: usize) -> Result<Vec<Hypothesis>> {
    if k == 0 {
        return Err(Error::param("k", "need at least one query"));
    }
    let grid = threshold_grid(domain, 0)?;
    let cuts = grid.len() - 1;
    Ok((0..k).map(|j| grid[j * cuts / k].clone()).collect())
}

/// Declared VC bound for `k`-fold intersections or unions: `2 d k log2(3k)`.
pub fn kfold_vc_bound(k: usize, max_vc: usize) -> usize {
    if k <= 1 {
        return max_vc;
    }
    (2.0 * max_vc as f64 * k as f64 * (3.0 * k as f64).log2()).ceil() as usize
}

/// Wraps `classes` as the class of `k`-fold intersections or unions.
pub fn kfold_combine(classes: Vec<HypothesisClass>, op: SetOp) -> Result<HypothesisClass> {
    if classes.is_empty() {
        return Err(Error::Empty("k-fold class list"));
    }
    let max_vc = classes.iter().map(|c| c.vc_dim).max().unwrap_or(1);
    let k = classes.len();
    let exact = k == 1 && !classes[0].vc_is_bound;
    Ok(HypothesisClass {
        family: Family::KFold { op, parts: classes },
        vc_dim: kfold_vc_bound(k, max_vc),
        vc_is_bound: !exact,
    })
}

pub fn hypothesis_to_token(h: &Hypothesis) -> String {
    token::hypothesis_to_token(h)
}

pub fn hypothesis_from_token(s: &str) -> Result<Hypothesis> {
    token::hypothesis_from_token(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::sync::Arc;

    fn line(coords: &[f64]) -> Domain {
        Domain::from_points(coords.iter().map(|&c| vec![c]).collect()).unwrap()
    }

    #[test]
    fn evaluate_examples() {
        let d = line(&[0.25, 0.75]);
        let h = Hypothesis::threshold(0.5);
        assert_eq!(evaluate(&h, &d, 1).unwrap(), 1);
        assert_eq!(evaluate(&h, &d, 0).unwrap(), -1);
        let d2 = Domain::from_points(vec![vec![0.3, 0.3]]).unwrap();
        let hs = Hypothesis::Halfspace {
            w: vec![1.0, -1.0],
            c: 0.0,
        };
        assert_eq!(evaluate(&hs, &d2, 0).unwrap(), 1);
    }

    #[test]
    fn geometric_family_needs_embedding() {
        let d = Domain::abstract_atoms(3).unwrap();
        assert!(matches!(
            evaluate(&Hypothesis::threshold(0.1), &d, 0),
            Err(Error::MissingEmbedding(_))
        ));
    }

    #[test]
    fn declared_vc_dimensions() {
        assert_eq!(HypothesisClass::threshold1d().vc_dim(), 1);
        assert_eq!(HypothesisClass::halfspace(3).unwrap().vc_dim(), 4);
        assert_eq!(HypothesisClass::poly_threshold(2, 2).unwrap().vc_dim(), 6);
        let k = kfold_combine(
            vec![HypothesisClass::threshold1d(), HypothesisClass::threshold1d()],
            SetOp::Intersection,
        )
        .unwrap();
        assert!(k.vc_is_bound());
        assert!(k.vc_dim() >= 2);
        assert!(kfold_combine(vec![], SetOp::Union).is_err());
    }

    #[test]
    fn kfold_of_one_is_identity() {
        let d = Domain::unit_grid(50).unwrap();
        for h in threshold_grid(&d, 0).unwrap() {
            let wrapped = Hypothesis::And(vec![h.clone()]);
            assert_eq!(wrapped.materialize(&d).unwrap(), h.materialize(&d).unwrap());
            let wrapped = Hypothesis::Or(vec![h.clone()]);
            assert_eq!(wrapped.materialize(&d).unwrap(), h.materialize(&d).unwrap());
        }
    }

    #[test]
    fn intersection_with_complement_is_interval() {
        let d = Domain::unit_grid(200).unwrap();
        let h = Hypothesis::And(vec![
            Hypothesis::threshold(0.3),
            Hypothesis::threshold(0.7).complement(),
        ]);
        let bits = h.materialize(&d).unwrap();
        for i in 0..d.len() {
            let x = d.coord(i).unwrap();
            assert_eq!(bits.get(i), (0.3..0.7).contains(&x), "atom {i} at {x}");
        }
    }

    #[test]
    fn union_of_disjoint_intervals() {
        let d = Domain::unit_grid(200).unwrap();
        let a = Hypothesis::Intervals(vec![(0.1, 0.2)]);
        let b = Hypothesis::Intervals(vec![(0.5, 0.65)]);
        let bits = Hypothesis::Or(vec![a, b]).materialize(&d).unwrap();
        for i in 0..d.len() {
            let x = d.coord(i).unwrap();
            let expect = (0.1..0.2).contains(&x) || (0.5..0.65).contains(&x);
            assert_eq!(bits.get(i), expect);
        }
    }

    #[test]
    fn error_query_marks_mistakes() {
        let base = Arc::new(Domain::unit_grid(4).unwrap());
        let lab = Domain::labeled(&base);
        let q = Hypothesis::threshold(0.5).error_query(&lab).unwrap();
        // atoms 0,1 predict -1; atoms 2,3 predict +1.
        let expect = [false, true, false, true, true, false, true, false];
        for (a, e) in expect.iter().enumerate() {
            assert_eq!(q.get(a), *e, "atom {a}");
        }
    }

    #[test]
    fn threshold_grid_has_n_plus_one_members() {
        let d = Domain::unit_grid(37).unwrap();
        let g = threshold_grid(&d, 0).unwrap();
        assert_eq!(g.len(), 38);
        let sizes: Vec<usize> = g.iter().map(|h| h.materialize(&d).unwrap().count_ones()).collect();
        assert_eq!(sizes, (0..=37).rev().collect::<Vec<_>>());
    }

    #[test]
    fn evenly_spaced_thresholds_include_all_ones() {
        let d = Domain::unit_grid(64).unwrap();
        let qs = evenly_spaced_thresholds(&d, 64).unwrap();
        assert_eq!(qs.len(), 64);
        assert_eq!(qs[0].materialize(&d).unwrap().count_ones(), 64);
        assert_eq!(qs[63].materialize(&d).unwrap().count_ones(), 1);
    }

    fn arb_hypothesis() -> impl Strategy<Value = Hypothesis> {
        let leaf =
            prop_oneof![
                (-0.2f64..1.2).prop_map(Hypothesis::threshold),
                (proptest::collection::vec(-2.0f64..2.0, 1), -1.0f64..1.0)
                    .prop_map(|(w, c)| Hypothesis::Halfspace { w, c }),
                (proptest::collection::vec(-2.0f64..2.0, 2), -1.0f64..1.0)
                    .prop_map(|(w, c)| Hypothesis::PolyThreshold { degree: 2, w, c }),
                (0.0f64..0.5, 0.0f64..0.5).prop_map(|(a, w)| Hypothesis::Intervals(vec![(a, a + w)])),
            ];
        leaf.prop_recursive(3, 12, 3, |inner| {
            prop_oneof![
                inner.clone().prop_map(Hypothesis::complement),
                proptest::collection::vec(inner.clone(), 1..3).prop_map(Hypothesis::And),
                proptest::collection::vec(inner.clone(), 1..3).prop_map(Hypothesis::Or),
                (inner.clone(), inner).prop_map(|(a, b)| Hypothesis::Xor(Box::new(a), Box::new(b))),
            ]
        })
    }

    proptest! {
        #[test]
        fn materialize_commutes_with_evaluate(h in arb_hypothesis()) {
            let d = Domain::unit_grid(40).unwrap();
            let bits = h.materialize(&d).unwrap();
            for i in 0..d.len() {
                prop_assert_eq!(bits.get(i), evaluate(&h, &d, i).unwrap() == 1);
            }
        }

        #[test]
        fn token_round_trip(h in arb_hypothesis()) {
            let t = hypothesis_to_token(&h);
            prop_assert_eq!(hypothesis_from_token(&t).unwrap(), h);
        }
    }
}
