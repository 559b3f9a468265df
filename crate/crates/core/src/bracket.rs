//! ε-bracketings: pairs `lower ⪯ upper` of {0,1} functions whose disagreement
//! has small mass, and the constructions that build them.

use std::fmt::Write as _;
use std::sync::Arc;

use crate::bits::BitSet;
use crate::domain::{same_domain, Dist, Domain, MASS_TOL};
use crate::error::{Error, Result};
use crate::hypothesis::SetOp;

#[derive(Debug, Clone, PartialEq)]
pub struct Bracket {
    lower: BitSet,
    upper: BitSet,
    gap: f64,
}

impl Bracket {
    /// Checks `lower ⪯ upper` and computes the gap under `mu` exactly.
    pub fn new(lower: BitSet, upper: BitSet, mu: &Dist) -> Result<Self> {
        if lower.len() != mu.len() || upper.len() != mu.len() {
            return Err(Error::DomainMismatch(format!(
                "bracket over {}/{} atoms with a measure over {}",
                lower.len(),
                upper.len(),
                mu.len()
            )));
        }
        if let Some(a) = lower.first_excess(&upper) {
            return Err(Error::param("bracket", format!("lower exceeds upper at atom {a}")));
        }
        let gap = upper.xor(&lower)?.weighted_count(mu.weights());
        Ok(Self { lower, upper, gap })
    }

    pub fn lower(&self) -> &BitSet {
        &self.lower
    }

    pub fn upper(&self) -> &BitSet {
        &self.upper
    }

    pub fn gap(&self) -> f64 {
        self.gap
    }

    pub fn contains(&self, f: &BitSet) -> bool {
        self.lower.is_subset_of(f) && f.is_subset_of(&self.upper)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bracketing {
    brackets: Vec<Bracket>,
    epsilon: f64,
    measure: Dist,
    class_id: String,
}

impl Bracketing {
    pub fn new(brackets: Vec<Bracket>, epsilon: f64, measure: Dist, class_id: impl Into<String>) -> Result<Self> {
        if brackets.is_empty() {
            return Err(Error::Empty("brackets"));
        }
        if !(epsilon > 0.0) {
            return Err(Error::param("epsilon", format!("must be positive, got {epsilon}")));
        }
        Ok(Self {
            brackets,
            epsilon,
            measure,
            class_id: class_id.into(),
        })
    }

    pub fn brackets(&self) -> &[Bracket] {
        &self.brackets
    }

    pub fn len(&self) -> usize {
        self.brackets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.brackets.is_empty()
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn measure(&self) -> &Dist {
        &self.measure
    }

    pub fn class_id(&self) -> &str {
        &self.class_id
    }

    pub fn max_gap(&self) -> f64 {
        self.brackets.iter().map(Bracket::gap).fold(0.0, f64::max)
    }

    /// Index of the first bracket containing `f`.
    pub fn find(&self, f: &BitSet) -> Option<usize> {
        self.brackets.iter().position(|b| b.contains(f))
    }

    /// The bracketing of complements: `[¬upper, ¬lower]`.
    pub fn complement(&self) -> Result<Self> {
        let brackets = self
            .brackets
            .iter()
            .map(|b| Bracket::new(b.upper.not(), b.lower.not(), &self.measure))
            .collect::<Result<_>>()?;
        Self::new(
            brackets,
            self.epsilon,
            self.measure.clone(),
            format!("complement:({})", self.class_id),
        )
    }
}

/// Greedy ε-bracketing of thresholds on axis 0.
pub fn bracket_thresholds(epsilon: f64, mu: &Dist) -> Result<Bracketing> {
    bracket_thresholds_on_axis(epsilon, mu, 0)
}

/// Greedy ε-bracketing of `{1(x[axis] ≥ b)}`.
///
/// Atoms are grouped by coordinate; cut `j` is the threshold that is 1 on
/// groups `j..`. A bracket spans cuts `a..=b` and its gap is the mass of
/// groups `a..b`. Each bracket takes the largest `b` with gap ≤ ε and the next
/// one starts at cut `b + 1`.
pub fn bracket_thresholds_on_axis(epsilon: f64, mu: &Dist, axis: usize) -> Result<Bracketing> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::param("epsilon", format!("must lie in (0, 1], got {epsilon}")));
    }
    let domain = mu.domain();
    let order = domain.order_by_axis(axis)?;
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut last = f64::NAN;
    for a in order {
        let c = domain.point(a).expect("ordered domains are embedded")[axis];
        if c == last {
            groups.last_mut().expect("nonempty").push(a);
        } else {
            groups.push(vec![a]);
            last = c;
        }
    }
    let w = mu.weights();
    let mass: Vec<f64> = groups.iter().map(|g| g.iter().map(|&a| w[a]).sum()).collect();
    let g = groups.len();
    let cut_set = |j: usize| {
        let mut bits = BitSet::zeros(domain.len());
        for grp in &groups[j..] {
            for &a in grp {
                bits.set(a, true);
            }
        }
        bits
    };
    let mut brackets = Vec::new();
    let mut a = 0;
    while a <= g {
        let mut b = a;
        let mut gap = 0.0;
        while b < g && gap + mass[b] <= epsilon + MASS_TOL {
            gap += mass[b];
            b += 1;
        }
        brackets.push(Bracket::new(cut_set(b), cut_set(a), mu)?);
        a = b + 1;
    }
    Bracketing::new(brackets, epsilon, mu.clone(), "threshold1d")
}

fn same_measure(a: &Dist, b: &Dist) -> Result<()> {
    same_domain(a.domain(), b.domain())?;
    if a.weights()
        .iter()
        .zip(b.weights())
        .any(|(x, y)| (x - y).abs() > MASS_TOL)
    {
        return Err(Error::DomainMismatch("bracketings use different measures".into()));
    }
    Ok(())
}

/// Product bracketing: lowers and uppers combined pointwise by `∧` or `∨`.
/// The parameter is the sum of the input parameters.
pub fn compose_brackets(inputs: &[&Bracketing], op: SetOp) -> Result<Bracketing> {
    let first = *inputs.first().ok_or(Error::Empty("bracketings to compose"))?;
    for b in &inputs[1..] {
        same_measure(&first.measure, &b.measure)?;
    }
    let mu = &first.measure;
    let combine = |x: &BitSet, y: &BitSet| match op {
        SetOp::Intersection => x.and(y),
        SetOp::Union => x.or(y),
    };
    let mut acc: Vec<(BitSet, BitSet)> = first
        .brackets
        .iter()
        .map(|b| (b.lower.clone(), b.upper.clone()))
        .collect();
    for b in &inputs[1..] {
        let mut next = Vec::with_capacity(acc.len() * b.len());
        for (lo, up) in &acc {
            for br in &b.brackets {
                next.push((combine(lo, &br.lower)?, combine(up, &br.upper)?));
            }
        }
        acc = next;
    }
    let brackets = acc
        .into_iter()
        .map(|(lo, up)| Bracket::new(lo, up, mu))
        .collect::<Result<_>>()?;
    let name = match op {
        SetOp::Intersection => "kfold_intersection",
        SetOp::Union => "kfold_union",
    };
    let parts: String = inputs.iter().map(|b| format!("({})", b.class_id)).collect();
    Bracketing::new(
        brackets,
        inputs.iter().map(|b| b.epsilon).sum(),
        mu.clone(),
        format!("{name}:{parts}"),
    )
}

/// Bracketing of `{f Δ f'}` through `f Δ f' = (f ∨ f') ∧ ¬(f ∧ f')`:
/// parameter `4ε`, size `|b|⁴`.
pub fn sym_diff_bracketing(b: &Bracketing) -> Result<Bracketing> {
    let union = compose_brackets(&[b, b], SetOp::Union)?;
    let inter = compose_brackets(&[b, b], SetOp::Intersection)?.complement()?;
    let mut out = compose_brackets(&[&union, &inter], SetOp::Intersection)?;
    out.class_id = format!("sym_difference:({})", b.class_id);
    Ok(out)
}

/// A map from source atoms to image atoms; `None` where undefined.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AtomMap {
    targets: Vec<Option<usize>>,
    image_len: usize,
}

impl AtomMap {
    pub fn new(targets: Vec<Option<usize>>, image_len: usize) -> Result<Self> {
        if let Some(t) = targets.iter().flatten().find(|&&t| t >= image_len) {
            return Err(Error::param("map", format!("target {t} out of range")));
        }
        Ok(Self { targets, image_len })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            targets: (0..n).map(Some).collect(),
            image_len: n,
        }
    }

    /// Applies `psi` to every point of `source` and returns the map onto the
    /// domain of distinct images, listed in first-seen order.
    pub fn embed(source: &Domain, psi: impl Fn(&[f64]) -> Vec<f64>) -> Result<(Self, Domain)> {
        let mut images: Vec<Vec<f64>> = Vec::new();
        let mut targets = Vec::with_capacity(source.len());
        for a in 0..source.len() {
            let p = source
                .point(a)
                .ok_or_else(|| Error::MissingEmbedding("embedding map".into()))?;
            let z = psi(p);
            let idx = match images.iter().position(|q| *q == z) {
                Some(i) => i,
                None => {
                    images.push(z);
                    images.len() - 1
                }
            };
            targets.push(Some(idx));
        }
        let image = Domain::from_points(images)?;
        Ok((Self::new(targets, image.len())?, image))
    }

    pub fn targets(&self) -> &[Option<usize>] {
        &self.targets
    }

    pub fn source_len(&self) -> usize {
        self.targets.len()
    }

    fn total(&self) -> Result<Vec<usize>> {
        self.targets
            .iter()
            .enumerate()
            .map(|(a, t)| t.ok_or_else(|| Error::param("map", format!("undefined on source atom {a}"))))
            .collect()
    }

    /// `f ∘ psi` for `f` over the image.
    pub fn pull(&self, f: &BitSet) -> Result<BitSet> {
        if f.len() != self.image_len {
            return Err(Error::LengthMismatch {
                expected: self.image_len,
                actual: f.len(),
            });
        }
        let t = self.total()?;
        Ok(BitSet::from_fn(t.len(), |a| f.get(t[a])))
    }
}

/// Image measure: each image atom gets the summed mass of its preimages.
pub fn pushforward(mu: &Dist, psi: &AtomMap, image: Arc<Domain>) -> Result<Dist> {
    if mu.len() != psi.source_len() {
        return Err(Error::LengthMismatch {
            expected: psi.source_len(),
            actual: mu.len(),
        });
    }
    if image.len() != psi.image_len {
        return Err(Error::LengthMismatch {
            expected: psi.image_len,
            actual: image.len(),
        });
    }
    let mut w = vec![0.0; image.len()];
    for (a, t) in psi.total()?.into_iter().enumerate() {
        w[t] += mu.weights()[a];
    }
    Dist::new(image, w)
}

/// `[lower ∘ psi, upper ∘ psi]` for each bracket of `b`, measured under
/// `source_mu`. `b` must be taken under the pushforward of `source_mu`.
pub fn pullback_bracketing(psi: &AtomMap, source_mu: &Dist, b: &Bracketing) -> Result<Bracketing> {
    let pushed = pushforward(source_mu, psi, Arc::clone(b.measure.domain()))?;
    same_measure(&pushed, &b.measure)?;
    let brackets = b
        .brackets
        .iter()
        .map(|br| Bracket::new(psi.pull(&br.lower)?, psi.pull(&br.upper)?, source_mu))
        .collect::<Result<_>>()?;
    Bracketing::new(
        brackets,
        b.epsilon,
        source_mu.clone(),
        format!("pullback:({})", b.class_id),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContainmentViolation {
    /// Index into the class sample.
    pub hypothesis: usize,
    /// Bracket that comes closest to containing it.
    pub bracket: usize,
    pub witness_atom: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BracketReport {
    pub pass: bool,
    pub worst_gap: f64,
    /// Brackets whose recomputed gap exceeds ε or whose lower is not below
    /// their upper.
    pub bad_brackets: Vec<usize>,
    pub violations: Vec<ContainmentViolation>,
}

/// Recomputes every gap, checks domination, and finds a containing bracket
/// for each function in `class_sample`.
pub fn verify_bracketing(b: &Bracketing, class_sample: &[BitSet]) -> BracketReport {
    let w = b.measure.weights();
    let mut worst_gap: f64 = 0.0;
    let mut bad_brackets = Vec::new();
    for (i, br) in b.brackets.iter().enumerate() {
        let dominated = br.lower.is_subset_of(&br.upper);
        let gap = br
            .upper
            .xor(&br.lower)
            .map(|x| x.weighted_count(w))
            .unwrap_or(f64::INFINITY);
        worst_gap = worst_gap.max(gap);
        if !dominated || gap > b.epsilon + MASS_TOL {
            bad_brackets.push(i);
        }
    }
    let mut violations = Vec::new();
    for (h, f) in class_sample.iter().enumerate() {
        if b.find(f).is_some() {
            continue;
        }
        // Report the bracket with the fewest offending atoms.
        let mut best: Option<(usize, usize, usize)> = None;
        for (i, br) in b.brackets.iter().enumerate() {
            if br.lower.len() != f.len() {
                continue;
            }
            let below = br.lower.and(&f.not()).expect("same length");
            let above = f.and(&br.upper.not()).expect("same length");
            let count = below.count_ones() + above.count_ones();
            let witness = below.iter_ones().chain(above.iter_ones()).min();
            if let Some(a) = witness {
                if best.is_none_or(|(c, _, _)| count < c) {
                    best = Some((count, i, a));
                }
            }
        }
        let (bracket, witness_atom) = best.map_or((0, 0), |(_, i, a)| (i, a));
        violations.push(ContainmentViolation {
            hypothesis: h,
            bracket,
            witness_atom,
        });
    }
    BracketReport {
        pass: bad_brackets.is_empty() && violations.is_empty(),
        worst_gap,
        bad_brackets,
        violations,
    }
}

/// Header `epsilon=<real> count=<int>`, then one `lower upper` pair of
/// run-length encodings per line.
pub fn bracketing_to_text(b: &Bracketing) -> String {
    let mut out = format!("epsilon={:?} count={}\n", b.epsilon, b.len());
    for br in &b.brackets {
        let _ = writeln!(out, "{} {}", br.lower.to_rle(), br.upper.to_rle());
    }
    out
}

/// Parses [`bracketing_to_text`] output; gaps are recomputed under `mu`.
pub fn bracketing_from_text(text: &str, mu: &Dist, class_id: &str) -> Result<Bracketing> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or(Error::Empty("bracketing text"))?;
    let mut epsilon = None;
    let mut count = None;
    for field in header.split_whitespace() {
        match field.split_once('=') {
            Some(("epsilon", v)) => epsilon = Some(crate::domain::parse_num::<f64>(v)?),
            Some(("count", v)) => count = Some(crate::domain::parse_num::<usize>(v)?),
            _ => return Err(Error::Parse(format!("unexpected header field `{field}`"))),
        }
    }
    let epsilon = epsilon.ok_or_else(|| Error::Parse("missing epsilon".into()))?;
    let count = count.ok_or_else(|| Error::Parse("missing count".into()))?;
    let mut brackets = Vec::with_capacity(count);
    for line in lines {
        let mut parts = line.split_whitespace();
        let (Some(lo), Some(up), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::Parse(format!("expected `lower upper`, got `{line}`")));
        };
        brackets.push(Bracket::new(BitSet::from_rle(lo)?, BitSet::from_rle(up)?, mu)?);
    }
    if brackets.len() != count {
        return Err(Error::LengthMismatch {
            expected: count,
            actual: brackets.len(),
        });
    }
    Bracketing::new(brackets, epsilon, mu.clone(), class_id)
}
