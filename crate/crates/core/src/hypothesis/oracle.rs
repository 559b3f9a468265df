//! Consistency oracles and the labeling tree built on top of them.

use std::collections::HashMap;

use rayon::prelude::*;

use super::{dot, lp, monomial_count, monomial_embed, Family, Hypothesis, HypothesisClass, SetOp};
use crate::domain::Domain;
use crate::error::{Error, Result};

const KFOLD_SEARCH_BUDGET: usize = 1_000_000;

/// Finds a member of `class` consistent with `labeled`, or `None` when no
/// member exists. Atoms in `labeled` must be distinct.
pub fn consistency_oracle(
    class: &HypothesisClass,
    domain: &Domain,
    labeled: &[(usize, i8)],
) -> Result<Option<Hypothesis>> {
    ConsistencyOracle::new(class, domain)?.find(labeled)
}

/// A consistency oracle with per-domain precomputation.
pub struct ConsistencyOracle<'a> {
    class: &'a HypothesisClass,
    domain: &'a Domain,
    sorted_coords: Vec<f64>,
}

impl<'a> ConsistencyOracle<'a> {
    pub fn new(class: &'a HypothesisClass, domain: &'a Domain) -> Result<Self> {
        let needs_line = matches!(class.family(), Family::Threshold1d | Family::IntervalUnion { .. });
        let sorted_coords = if needs_line {
            if !domain.has_embedding() {
                return Err(Error::MissingEmbedding(class.id()));
            }
            let mut c: Vec<f64> = (0..domain.len()).map(|a| domain.coord(a).expect("embedded")).collect();
            c.sort_by(f64::total_cmp);
            c.dedup();
            c
        } else {
            Vec::new()
        };
        match class.family() {
            Family::Halfspace { dim } if domain.dim() != *dim => {
                return Err(Error::LengthMismatch {
                    expected: *dim,
                    actual: domain.dim(),
                })
            }
            Family::PolyThreshold { n, .. } if domain.dim() != *n => {
                return Err(Error::LengthMismatch {
                    expected: *n,
                    actual: domain.dim(),
                })
            }
            Family::Halfspace { .. } | Family::PolyThreshold { .. } if !domain.has_embedding() => {
                return Err(Error::MissingEmbedding(class.id()))
            }
            _ => {}
        }
        Ok(Self {
            class,
            domain,
            sorted_coords,
        })
    }

    pub fn find(&self, labeled: &[(usize, i8)]) -> Result<Option<Hypothesis>> {
        match self.class.family() {
            Family::Threshold1d => {
                let mut st = ThresholdState::default();
                for &(a, y) in labeled {
                    st.add(self.coord(a)?, y);
                }
                Ok(self.threshold_witness(&st))
            }
            Family::IntervalUnion { k } => self.intervals(*k, labeled),
            Family::Halfspace { .. } => {
                let pts: Vec<Vec<f64>> = labeled
                    .iter()
                    .map(|&(a, _)| self.point(a).map(<[f64]>::to_vec))
                    .collect::<Result<_>>()?;
                Ok(separate(&pts, labeled, self.domain.dim())?.map(|(w, c)| Hypothesis::Halfspace { w, c }))
            }
            Family::PolyThreshold { degree, .. } => {
                let pts: Vec<Vec<f64>> = labeled
                    .iter()
                    .map(|&(a, _)| self.point(a).map(|p| monomial_embed(p, *degree)))
                    .collect::<Result<_>>()?;
                let dim = monomial_count(self.domain.dim(), *degree);
                Ok(separate(&pts, labeled, dim)?.map(|(w, c)| Hypothesis::PolyThreshold { degree: *degree, w, c }))
            }
            Family::Complement(base) => {
                let flipped: Vec<(usize, i8)> = labeled.iter().map(|&(a, y)| (a, -y)).collect();
                Ok(ConsistencyOracle::new(base, self.domain)?
                    .find(&flipped)?
                    .map(Hypothesis::complement))
            }
            Family::Singleton(h) => {
                for &(a, y) in labeled {
                    if h.indicator(self.domain, a)? != (y > 0) {
                        return Ok(None);
                    }
                }
                Ok(Some(h.clone()))
            }
            Family::KFold { op, parts } => self.kfold(*op, parts, labeled),
            Family::SymDifference(base) => {
                let atoms: Vec<usize> = labeled.iter().map(|&(a, _)| a).collect();
                let target: Vec<i8> = labeled.iter().map(|&(_, y)| y).collect();
                let labelings = realized_labelings(base, self.domain, &atoms)?;
                let index: HashMap<&[i8], &Hypothesis> =
                    labelings.iter().map(|l| (l.labels.as_slice(), &l.witness)).collect();
                for l in &labelings {
                    // f Δ f' = +1 exactly where the labels differ.
                    let partner: Vec<i8> = l
                        .labels
                        .iter()
                        .zip(&target)
                        .map(|(&a, &y)| if y > 0 { -a } else { a })
                        .collect();
                    if let Some(w) = index.get(partner.as_slice()) {
                        return Ok(Some(Hypothesis::Xor(
                            Box::new(l.witness.clone()),
                            Box::new((*w).clone()),
                        )));
                    }
                }
                Ok(None)
            }
        }
    }

    fn coord(&self, atom: usize) -> Result<f64> {
        Ok(self.point(atom)?[0])
    }

    fn point(&self, atom: usize) -> Result<&'a [f64]> {
        if atom >= self.domain.len() {
            return Err(Error::param("atom", format!("{atom} out of range")));
        }
        self.domain
            .point(atom)
            .ok_or_else(|| Error::MissingEmbedding(self.class.id()))
    }

    /// Smallest domain coordinate above every negative, if it does not exceed
    /// any positive.
    fn threshold_witness(&self, st: &ThresholdState) -> Option<Hypothesis> {
        let idx = self.sorted_coords.partition_point(|&c| c <= st.max_neg);
        let b = self.sorted_coords.get(idx).copied().unwrap_or(f64::INFINITY);
        (b <= st.min_pos).then_some(Hypothesis::Threshold { axis: 0, b })
    }

    fn intervals(&self, k: usize, labeled: &[(usize, i8)]) -> Result<Option<Hypothesis>> {
        let mut pts: Vec<(f64, i8)> = labeled
            .iter()
            .map(|&(a, y)| Ok((self.coord(a)?, y)))
            .collect::<Result<_>>()?;
        pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        if pts.windows(2).any(|w| w[0].0 == w[1].0 && w[0].1 != w[1].1) {
            return Ok(None);
        }
        let mut intervals = Vec::new();
        let mut i = 0;
        while i < pts.len() {
            if pts[i].1 > 0 {
                let start = pts[i].0;
                while i < pts.len() && pts[i].1 > 0 {
                    i += 1;
                }
                let end = pts.get(i).map_or(f64::INFINITY, |p| p.0);
                intervals.push((start, end));
            } else {
                i += 1;
            }
        }
        Ok((intervals.len() <= k).then_some(Hypothesis::Intervals(intervals)))
    }

    fn kfold(&self, op: SetOp, parts: &[HypothesisClass], labeled: &[(usize, i8)]) -> Result<Option<Hypothesis>> {
        // Intersection: every part is +1 on positives and some part is −1 on
        // each negative. Union is the mirror image.
        let (all_label, some_label) = match op {
            SetOp::Intersection => (1i8, -1i8),
            SetOp::Union => (-1, 1),
        };
        let common: Vec<(usize, i8)> = labeled.iter().copied().filter(|&(_, y)| y == all_label).collect();
        let pending: Vec<usize> = labeled
            .iter()
            .filter(|&&(_, y)| y == some_label)
            .map(|&(a, _)| a)
            .collect();
        let oracles: Vec<ConsistencyOracle> = parts
            .iter()
            .map(|p| ConsistencyOracle::new(p, self.domain))
            .collect::<Result<_>>()?;
        let mut witnesses = Vec::with_capacity(parts.len());
        for o in &oracles {
            match o.find(&common)? {
                Some(w) => witnesses.push(w),
                None => return Ok(None),
            }
        }
        let mut search = KFoldSearch {
            domain: self.domain,
            oracles: &oracles,
            common: &common,
            pending: &pending,
            some_label,
            assigned: vec![Vec::new(); parts.len()],
            witnesses,
            budget: KFOLD_SEARCH_BUDGET,
        };
        if search.assign(0)? {
            let ws = search.witnesses;
            Ok(Some(match op {
                SetOp::Intersection => Hypothesis::And(ws),
                SetOp::Union => Hypothesis::Or(ws),
            }))
        } else {
            Ok(None)
        }
    }
}

struct KFoldSearch<'o, 'a> {
    domain: &'a Domain,
    oracles: &'o [ConsistencyOracle<'a>],
    common: &'o [(usize, i8)],
    pending: &'o [usize],
    some_label: i8,
    assigned: Vec<Vec<usize>>,
    witnesses: Vec<Hypothesis>,
    budget: usize,
}

impl KFoldSearch<'_, '_> {
    fn assign(&mut self, idx: usize) -> Result<bool> {
        if idx == self.pending.len() {
            return Ok(true);
        }
        if self.budget == 0 {
            return Err(Error::Infeasible("k-fold consistency search budget exhausted".into()));
        }
        self.budget -= 1;
        let x = self.pending[idx];
        let want = self.some_label > 0;
        // Parts whose current witness already gives x the needed label.
        for j in 0..self.oracles.len() {
            if self.witnesses[j].indicator(self.domain, x)? == want {
                self.assigned[j].push(x);
                if self.assign(idx + 1)? {
                    return Ok(true);
                }
                self.assigned[j].pop();
                // Witness is unchanged, so other covered parts behave the same.
                return self.assign_with_refit(idx, x, Some(j));
            }
        }
        self.assign_with_refit(idx, x, None)
    }

    fn assign_with_refit(&mut self, idx: usize, x: usize, skip: Option<usize>) -> Result<bool> {
        for j in 0..self.oracles.len() {
            if Some(j) == skip {
                continue;
            }
            let mut labels: Vec<(usize, i8)> = self.common.to_vec();
            labels.extend(self.assigned[j].iter().map(|&a| (a, self.some_label)));
            labels.push((x, self.some_label));
            if let Some(w) = self.oracles[j].find(&labels)? {
                let old = std::mem::replace(&mut self.witnesses[j], w);
                self.assigned[j].push(x);
                if self.assign(idx + 1)? {
                    return Ok(true);
                }
                self.assigned[j].pop();
                self.witnesses[j] = old;
            }
        }
        Ok(false)
    }
}

/// Strictly separates labeled points with a halfspace `sign(⟨w, x⟩ − c)`.
fn separate(points: &[Vec<f64>], labeled: &[(usize, i8)], dim: usize) -> Result<Option<(Vec<f64>, f64)>> {
    let rows: Vec<Vec<f64>> = points
        .iter()
        .zip(labeled)
        .map(|(p, &(_, y))| {
            let y = f64::from(y);
            let mut r: Vec<f64> = p.iter().map(|v| y * v).collect();
            r.push(-y);
            r
        })
        .collect();
    let Some(f) = lp::feasible_point(&rows, dim + 1)? else {
        return Ok(None);
    };
    let (w, c) = (f[..dim].to_vec(), f[dim]);
    for (p, &(_, y)) in points.iter().zip(labeled) {
        if (dot(&w, p) - c >= 0.0) != (y > 0) {
            return Err(Error::Infeasible(
                "separating solution failed post-hoc verification".into(),
            ));
        }
    }
    Ok(Some((w, c)))
}

#[derive(Debug, Clone, Copy)]
struct ThresholdState {
    max_neg: f64,
    min_pos: f64,
}

impl Default for ThresholdState {
    fn default() -> Self {
        Self {
            max_neg: f64::NEG_INFINITY,
            min_pos: f64::INFINITY,
        }
    }
}

impl ThresholdState {
    fn add(&mut self, c: f64, y: i8) {
        if y > 0 {
            self.min_pos = self.min_pos.min(c);
        } else {
            self.max_neg = self.max_neg.max(c);
        }
    }
}

/// One realized labeling of a point set with a class member producing it.
#[derive(Debug, Clone, PartialEq)]
pub struct Labeling {
    pub labels: Vec<i8>,
    pub witness: Hypothesis,
}

/// One witness per labeling of `atoms` realized by `class`, in the order
/// [`realized_labelings`] lists them. Thresholds are read off the sorted
/// points directly instead of expanding the tree.
pub fn realized_witnesses(class: &HypothesisClass, domain: &Domain, atoms: &[usize]) -> Result<Vec<Hypothesis>> {
    if !matches!(class.family(), Family::Threshold1d) {
        return Ok(realized_labelings(class, domain, atoms)?
            .into_iter()
            .map(|l| l.witness)
            .collect());
    }
    let oracle = ConsistencyOracle::new(class, domain)?;
    let mut coords: Vec<f64> = atoms.iter().map(|&a| oracle.coord(a)).collect::<Result<_>>()?;
    coords.sort_by(|a, b| b.total_cmp(a));
    coords.dedup();
    // Labelings are the cuts between sorted points; the tree emits them from
    // the all-negative labeling upward.
    let mut out = Vec::with_capacity(coords.len() + 1);
    let mut st = ThresholdState::default();
    for &c in &coords {
        st.max_neg = c;
        out.push(oracle.threshold_witness(&st).expect("a cut above every point exists"));
    }
    out.push(
        oracle
            .threshold_witness(&ThresholdState::default())
            .expect("nonempty domain"),
    );
    Ok(out)
}

struct Node {
    state: Option<ThresholdState>,
    witness: Hypothesis,
}

/// Frontiers smaller than this expand sequentially.
const PARALLEL_FRONTIER: usize = 256;

/// Every labeling of `atoms` realized by `class`, found by expanding a tree
/// that labels one more point per level and prunes nodes with no consistent
/// member. A node's witness realizes the node's labeling, so a child that
/// agrees with it reuses it and the labels are read off the witnesses at the
/// end. Sibling nodes expand in parallel.
pub fn realized_labelings(class: &HypothesisClass, domain: &Domain, atoms: &[usize]) -> Result<Vec<Labeling>> {
    let oracle = ConsistencyOracle::new(class, domain)?;
    let is_threshold = matches!(class.family(), Family::Threshold1d);
    let Some(root_witness) = oracle.find(&[])? else {
        return Ok(Vec::new());
    };
    let mut frontier = vec![Node {
        state: is_threshold.then(ThresholdState::default),
        witness: root_witness,
    }];
    for (depth, &atom) in atoms.iter().enumerate() {
        let expand = |node: &Node, out: &mut Vec<Node>| -> Result<()> {
            let current = node.witness.indicator(domain, atom)?;
            for label in [-1i8, 1] {
                let child = if let Some(mut st) = node.state {
                    st.add(oracle.coord(atom)?, label);
                    oracle.threshold_witness(&st).map(|w| (Some(st), w))
                } else if current == (label > 0) {
                    Some((None, node.witness.clone()))
                } else {
                    let mut labeled = Vec::with_capacity(depth + 1);
                    for &a in &atoms[..depth] {
                        labeled.push((a, super::evaluate(&node.witness, domain, a)?));
                    }
                    labeled.push((atom, label));
                    oracle.find(&labeled)?.map(|w| (None, w))
                };
                if let Some((state, witness)) = child {
                    out.push(Node { state, witness });
                }
            }
            Ok(())
        };
        let expand_chunk = |chunk: &[Node]| -> Result<Vec<Node>> {
            let mut out = Vec::with_capacity(2 * chunk.len());
            for node in chunk {
                expand(node, &mut out)?;
            }
            Ok(out)
        };
        let merged = if frontier.len() >= PARALLEL_FRONTIER {
            let parts: Vec<Vec<Node>> = frontier
                .par_chunks(PARALLEL_FRONTIER)
                .map(expand_chunk)
                .collect::<Result<_>>()?;
            parts.into_iter().flatten().collect()
        } else {
            expand_chunk(&frontier)?
        };
        frontier = merged;
    }
    frontier
        .into_iter()
        .map(|n| {
            let labels = atoms
                .iter()
                .map(|&a| super::evaluate(&n.witness, domain, a))
                .collect::<Result<_>>()?;
            Ok(Labeling {
                labels,
                witness: n.witness,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypothesis::{evaluate, kfold_combine};
    use proptest::prelude::*;
    use std::collections::HashSet;

    fn grid(n: usize) -> Domain {
        Domain::unit_grid(n).unwrap()
    }

    fn atom_at(d: &Domain, x: f64) -> usize {
        (0..d.len())
            .min_by(|&a, &b| {
                (d.coord(a).unwrap() - x)
                    .abs()
                    .total_cmp(&(d.coord(b).unwrap() - x).abs())
            })
            .unwrap()
    }

    fn assert_consistent(h: &Hypothesis, d: &Domain, labeled: &[(usize, i8)]) {
        for &(a, y) in labeled {
            assert_eq!(evaluate(h, d, a).unwrap(), y, "atom {a} in {h:?}");
        }
    }

    #[test]
    fn threshold_oracle_examples() {
        let d = Domain::from_points((0..=10).map(|i| vec![i as f64 / 10.0]).collect()).unwrap();
        let c = HypothesisClass::threshold1d();
        let lab = [(2, -1), (8, 1)];
        let h = consistency_oracle(&c, &d, &lab).unwrap().unwrap();
        let Hypothesis::Threshold { b, .. } = h else { panic!() };
        assert!(b > 0.2 && b <= 0.8);
        assert!((b - 0.3).abs() < 1e-12, "smallest grid b is 0.3, got {b}");
        assert!(consistency_oracle(&c, &d, &[(2, 1), (8, -1)]).unwrap().is_none());
        let all_neg = consistency_oracle(&c, &d, &[(10, -1)]).unwrap().unwrap();
        assert_eq!(all_neg, Hypothesis::threshold(f64::INFINITY));
    }

    fn triangle_domain() -> Domain {
        Domain::from_points(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![0.25, 0.25]]).unwrap()
    }

    #[test]
    fn halfspace_triangle_with_interior_negative_is_infeasible() {
        let d = triangle_domain();
        let c = HypothesisClass::halfspace(2).unwrap();
        let lab = [(0, 1), (1, 1), (2, 1), (3, -1)];
        assert!(consistency_oracle(&c, &d, &lab).unwrap().is_none());
        // Brute force over a grid of (w, c) finds no separator either.
        let mut found = false;
        for i in 0..=40 {
            for j in 0..=40 {
                for k in 0..=40 {
                    let w = [i as f64 / 10.0 - 2.0, j as f64 / 10.0 - 2.0];
                    let cc = k as f64 / 10.0 - 2.0;
                    let h = Hypothesis::Halfspace { w: w.to_vec(), c: cc };
                    if lab.iter().all(|&(a, y)| evaluate(&h, &d, a).unwrap() == y) {
                        found = true;
                    }
                }
            }
        }
        assert!(!found);
        // Flipping the interior point makes it separable.
        let lab = [(0, -1), (1, 1), (2, 1), (3, -1)];
        let h = consistency_oracle(&c, &d, &lab).unwrap().unwrap();
        assert_consistent(&h, &d, &lab);
    }

    #[test]
    fn halfspace_oracle_is_deterministic() {
        let d = triangle_domain();
        let c = HypothesisClass::halfspace(2).unwrap();
        let lab = [(0, -1), (1, 1), (3, -1)];
        let a = consistency_oracle(&c, &d, &lab).unwrap();
        let b = consistency_oracle(&c, &d, &lab).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn poly_threshold_separates_a_band() {
        // |x| ≥ 0.5 on a line is a degree-2 threshold but not a halfspace.
        let d = Domain::grid(20, -1.0, 1.0).unwrap();
        let lab: Vec<(usize, i8)> = (0..20)
            .map(|a| (a, if d.coord(a).unwrap().abs() >= 0.5 { 1 } else { -1 }))
            .collect();
        let poly = HypothesisClass::poly_threshold(1, 2).unwrap();
        let h = consistency_oracle(&poly, &d, &lab).unwrap().unwrap();
        assert_consistent(&h, &d, &lab);
        let half = HypothesisClass::halfspace(1).unwrap();
        assert!(consistency_oracle(&half, &d, &lab).unwrap().is_none());
    }

    #[test]
    fn interval_union_counts_runs() {
        let d = grid(10);
        let lab = [(1, 1), (3, -1), (5, 1), (7, -1), (8, 1)];
        let two = HypothesisClass::interval_union(2).unwrap();
        assert!(consistency_oracle(&two, &d, &lab).unwrap().is_none());
        let three = HypothesisClass::interval_union(3).unwrap();
        let h = consistency_oracle(&three, &d, &lab).unwrap().unwrap();
        assert_consistent(&h, &d, &lab);
    }

    #[test]
    fn kfold_oracles() {
        let d = grid(20);
        let inter = kfold_combine(
            vec![
                HypothesisClass::threshold1d(),
                HypothesisClass::complement(HypothesisClass::threshold1d()),
            ],
            SetOp::Intersection,
        )
        .unwrap();
        let lab = [(2, -1), (6, 1), (9, 1), (15, -1)];
        let h = consistency_oracle(&inter, &d, &lab).unwrap().unwrap();
        assert_consistent(&h, &d, &lab);
        // An interval cannot produce + − +.
        let bad = [(2, 1), (6, -1), (9, 1)];
        assert!(consistency_oracle(&inter, &d, &bad).unwrap().is_none());

        let uni = kfold_combine(
            vec![
                HypothesisClass::complement(HypothesisClass::threshold1d()),
                HypothesisClass::threshold1d(),
            ],
            SetOp::Union,
        )
        .unwrap();
        let h = consistency_oracle(&uni, &d, &bad).unwrap().unwrap();
        assert_consistent(&h, &d, &bad);
        assert!(consistency_oracle(&uni, &d, &[(2, -1), (6, 1), (9, -1)])
            .unwrap()
            .is_none());
    }

    #[test]
    fn sym_difference_oracle() {
        let d = grid(20);
        let c = HypothesisClass::sym_difference(HypothesisClass::threshold1d());
        let lab = [(2, -1), (6, 1), (9, 1), (15, -1)];
        let h = consistency_oracle(&c, &d, &lab).unwrap().unwrap();
        assert_consistent(&h, &d, &lab);
        assert!(consistency_oracle(&c, &d, &[(2, 1), (6, -1), (9, 1)])
            .unwrap()
            .is_none());
    }

    #[test]
    fn threshold_labelings_obey_sauer_shelah() {
        let d = grid(64);
        let c = HypothesisClass::threshold1d();
        for m in 1..=12usize {
            let atoms: Vec<usize> = (0..m).map(|i| (i * 37 + 5) % 64).collect();
            let mut uniq = atoms.clone();
            uniq.sort();
            uniq.dedup();
            let labs = realized_labelings(&c, &d, &uniq).unwrap();
            let distinct: HashSet<Vec<i8>> = labs.iter().map(|l| l.labels.clone()).collect();
            assert_eq!(distinct.len(), labs.len());
            assert!(labs.len() <= uniq.len() + 1);
            // Brute force over all 2^m labelings agrees.
            let mut brute = 0;
            for mask in 0u32..(1 << uniq.len()) {
                let lab: Vec<(usize, i8)> = uniq
                    .iter()
                    .enumerate()
                    .map(|(i, &a)| (a, if mask >> i & 1 == 1 { 1 } else { -1 }))
                    .collect();
                if consistency_oracle(&c, &d, &lab).unwrap().is_some() {
                    brute += 1;
                }
            }
            assert_eq!(brute, labs.len());
        }
    }

    #[test]
    fn threshold_fast_path_matches_tree() {
        let d = Domain::from_points((0..40).map(|i| vec![((i * 7) % 13) as f64 / 13.0]).collect()).unwrap();
        let c = HypothesisClass::threshold1d();
        let atoms: Vec<usize> = (0..40).step_by(3).collect();
        let tree: Vec<Hypothesis> = realized_labelings(&c, &d, &atoms)
            .unwrap()
            .into_iter()
            .map(|l| l.witness)
            .collect();
        assert_eq!(realized_witnesses(&c, &d, &atoms).unwrap(), tree);
    }

    #[test]
    fn labeling_tree_generic_path_matches_brute_force() {
        let d = Domain::from_points(vec![
            vec![0.1, 0.2],
            vec![0.8, 0.3],
            vec![0.4, 0.9],
            vec![0.5, 0.5],
            vec![0.9, 0.9],
        ])
        .unwrap();
        let c = HypothesisClass::halfspace(2).unwrap();
        let atoms: Vec<usize> = (0..5).collect();
        let labs = realized_labelings(&c, &d, &atoms).unwrap();
        for l in &labs {
            let lab: Vec<(usize, i8)> = atoms.iter().copied().zip(l.labels.iter().copied()).collect();
            assert_consistent(&l.witness, &d, &lab);
        }
        let mut brute = 0;
        for mask in 0u32..32 {
            let lab: Vec<(usize, i8)> = (0..5).map(|i| (i, if mask >> i & 1 == 1 { 1 } else { -1 })).collect();
            if consistency_oracle(&c, &d, &lab).unwrap().is_some() {
                brute += 1;
            }
        }
        assert_eq!(brute, labs.len());
    }

    proptest! {
        #[test]
        fn threshold_oracle_output_is_consistent(bs in proptest::collection::vec(0usize..50, 1..8), cut in 0usize..=50) {
            let d = grid(50);
            let c = HypothesisClass::threshold1d();
            let mut atoms = bs.clone();
            atoms.sort();
            atoms.dedup();
            let lab: Vec<(usize, i8)> = atoms.iter().map(|&a| (a, if a >= cut { 1 } else { -1 })).collect();
            let h = consistency_oracle(&c, &d, &lab).unwrap().unwrap();
            for &(a, y) in &lab {
                prop_assert_eq!(evaluate(&h, &d, a).unwrap(), y);
            }
        }

        #[test]
        fn halfspace_oracle_recovers_planted_separator(
            pts in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 3..12),
            w in (-1.0f64..1.0, -1.0f64..1.0),
            c in -0.5f64..0.5,
        ) {
            let d = Domain::from_points(pts.iter().map(|&(a, b)| vec![a, b]).collect()).unwrap();
            let planted = Hypothesis::Halfspace { w: vec![w.0, w.1], c };
            // Skip instances with points too close to the planted boundary.
            let margins: Vec<f64> = pts.iter().map(|&(a, b)| w.0 * a + w.1 * b - c).collect();
            prop_assume!(margins.iter().all(|m| m.abs() > 1e-3));
            let lab: Vec<(usize, i8)> = (0..d.len()).map(|a| (a, evaluate(&planted, &d, a).unwrap())).collect();
            let h = consistency_oracle(&HypothesisClass::halfspace(2).unwrap(), &d, &lab).unwrap().unwrap();
            for &(a, y) in &lab {
                prop_assert_eq!(evaluate(&h, &d, a).unwrap(), y);
            }
        }
    }

    #[test]
    fn halfspace_oracle_survives_roundoff_in_pivoting() {
        let pts = [
            (0.3170592478026458, -0.9261044983988872),
            (0.0, 0.0),
            (-0.9701868254380878, 0.6053586958213637),
            (0.9671607408996162, -0.926106188156191),
        ];
        let (w, c) = ((-0.7688534861741999, -0.9702379225311134), -0.4730334442679075);
        let d = Domain::from_points(pts.iter().map(|&(a, b)| vec![a, b]).collect()).unwrap();
        let planted = Hypothesis::Halfspace { w: vec![w.0, w.1], c };
        let lab: Vec<(usize, i8)> = (0..d.len()).map(|a| (a, evaluate(&planted, &d, a).unwrap())).collect();
        let h = consistency_oracle(&HypothesisClass::halfspace(2).unwrap(), &d, &lab)
            .unwrap()
            .unwrap();
        for &(a, y) in &lab {
            assert_eq!(evaluate(&h, &d, a).unwrap(), y);
        }
    }

    #[test]
    fn atom_helper_sanity() {
        let d = grid(10);
        assert_eq!(atom_at(&d, 0.05), 0);
    }
}
