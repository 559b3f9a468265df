//! `family-id:param,param,...` text tokens for hypotheses and classes.
//! Composite forms nest their parts in parentheses, e.g.
//! `and:(threshold1d:0.3)(not:(threshold1d:0.7))`.

use super::{kfold_combine, Family, Hypothesis, HypothesisClass, SetOp};
use crate::bits::BitSet;
use crate::domain::parse_num;
use crate::error::{Error, Result};

fn fmt_f(x: f64) -> String {
    format!("{x:?}")
}

fn join_f(xs: &[f64]) -> String {
    xs.iter().map(|&x| fmt_f(x)).collect::<Vec<_>>().join(",")
}

fn groups(parts: impl IntoIterator<Item = String>) -> String {
    parts.into_iter().map(|p| format!("({p})")).collect()
}

pub fn hypothesis_to_token(h: &Hypothesis) -> String {
    match h {
        Hypothesis::Constant(v) => format!("const:{}", if *v { "+1" } else { "-1" }),
        Hypothesis::Threshold { axis: 0, b } => format!("threshold1d:{}", fmt_f(*b)),
        Hypothesis::Threshold { axis, b } => format!("threshold1d:{},{axis}", fmt_f(*b)),
        Hypothesis::Intervals(iv) => {
            let flat: Vec<f64> = iv.iter().flat_map(|&(a, b)| [a, b]).collect();
            format!("interval_union:{}", join_f(&flat))
        }
        Hypothesis::Halfspace { w, c } => format!("halfspace:{},{}", join_f(w), fmt_f(*c)),
        Hypothesis::PolyThreshold { degree, w, c } => {
            format!("poly_threshold:{degree},{},{}", join_f(w), fmt_f(*c))
        }
        Hypothesis::Not(inner) => format!("not:({})", hypothesis_to_token(inner)),
        Hypothesis::And(parts) => format!("and:{}", groups(parts.iter().map(hypothesis_to_token))),
        Hypothesis::Or(parts) => format!("or:{}", groups(parts.iter().map(hypothesis_to_token))),
        Hypothesis::Xor(a, b) => format!("xor:{}", groups([hypothesis_to_token(a), hypothesis_to_token(b)])),
        Hypothesis::Table(bits) => format!("bits:{}", bits.to_rle()),
    }
}

fn split_family(s: &str) -> (&str, &str) {
    match s.trim().split_once(':') {
        Some((f, rest)) => (f, rest),
        None => (s.trim(), ""),
    }
}

fn floats(body: &str) -> Result<Vec<f64>> {
    if body.trim().is_empty() {
        return Ok(Vec::new());
    }
    body.split(',').map(parse_num::<f64>).collect()
}

/// Splits `(a)(b)(c)` into `["a", "b", "c"]`, respecting nesting.
fn parse_groups(body: &str) -> Result<Vec<&str>> {
    let body = body.trim();
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut start = 0;
    for (i, ch) in body.char_indices() {
        match ch {
            '(' => {
                if depth == 0 {
                    start = i + 1;
                }
                depth += 1;
            }
            ')' => {
                if depth == 0 {
                    return Err(Error::Parse(format!("unbalanced `)` in `{body}`")));
                }
                depth -= 1;
                if depth == 0 {
                    out.push(&body[start..i]);
                }
            }
            c if depth == 0 && !c.is_whitespace() => {
                return Err(Error::Parse(format!("expected `(` in `{body}`")));
            }
            _ => {}
        }
    }
    if depth != 0 {
        return Err(Error::Parse(format!("unbalanced `(` in `{body}`")));
    }
    Ok(out)
}

pub fn hypothesis_from_token(s: &str) -> Result<Hypothesis> {
    let (family, body) = split_family(s);
    Ok(match family {
        "const" => match body.trim() {
            "+1" | "1" => Hypothesis::Constant(true),
            "-1" | "0" => Hypothesis::Constant(false),
            other => return Err(Error::Parse(format!("bad constant `{other}`"))),
        },
        "threshold1d" => {
            let mut it = body.split(',');
            let b = parse_num::<f64>(it.next().unwrap_or(""))?;
            let axis = match it.next() {
                Some(a) => parse_num::<usize>(a)?,
                None => 0,
            };
            if it.next().is_some() {
                return Err(Error::Parse(format!("too many threshold parameters in `{s}`")));
            }
            Hypothesis::Threshold { axis, b }
        }
        "interval_union" => {
            let v = floats(body)?;
            if v.len() % 2 != 0 {
                return Err(Error::Parse(format!("odd endpoint count in `{s}`")));
            }
            Hypothesis::Intervals(v.chunks(2).map(|c| (c[0], c[1])).collect())
        }
        "halfspace" => {
            let mut v = floats(body)?;
            let c = v
                .pop()
                .ok_or_else(|| Error::Parse(format!("missing offset in `{s}`")))?;
            if v.is_empty() {
                return Err(Error::Parse(format!("missing weights in `{s}`")));
            }
            Hypothesis::Halfspace { w: v, c }
        }
        "poly_threshold" => {
            let (deg, rest) = body
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("missing parameters in `{s}`")))?;
            let degree = parse_num::<usize>(deg)?;
            let mut v = floats(rest)?;
            let c = v
                .pop()
                .ok_or_else(|| Error::Parse(format!("missing offset in `{s}`")))?;
            Hypothesis::PolyThreshold { degree, w: v, c }
        }
        "not" => Hypothesis::Not(Box::new(single(body)?)),
        "and" | "or" => {
            let parts = parse_groups(body)?
                .into_iter()
                .map(hypothesis_from_token)
                .collect::<Result<Vec<_>>>()?;
            if family == "and" {
                Hypothesis::And(parts)
            } else {
                Hypothesis::Or(parts)
            }
        }
        "xor" => {
            let g = parse_groups(body)?;
            if g.len() != 2 {
                return Err(Error::Parse(format!("xor needs two parts in `{s}`")));
            }
            Hypothesis::Xor(
                Box::new(hypothesis_from_token(g[0])?),
                Box::new(hypothesis_from_token(g[1])?),
            )
        }
        "bits" => Hypothesis::Table(BitSet::from_rle(body.trim())?),
        other => return Err(Error::Parse(format!("unknown hypothesis family `{other}`"))),
    })
}

fn single(body: &str) -> Result<Hypothesis> {
    let g = parse_groups(body)?;
    if g.len() != 1 {
        return Err(Error::Parse(format!("expected one part in `{body}`")));
    }
    hypothesis_from_token(g[0])
}

pub fn class_to_token(c: &HypothesisClass) -> String {
    match c.family() {
        Family::Threshold1d => "threshold1d".into(),
        Family::IntervalUnion { k } => format!("interval_union:{k}"),
        Family::Halfspace { dim } => format!("halfspace:{dim}"),
        Family::PolyThreshold { n, degree } => format!("poly_threshold:{n},{degree}"),
        Family::Complement(base) => format!("complement:({})", class_to_token(base)),
        Family::KFold { op, parts } => {
            let name = match op {
                SetOp::Intersection => "kfold_intersection",
                SetOp::Union => "kfold_union",
            };
            format!("{name}:{}", groups(parts.iter().map(class_to_token)))
        }
        Family::SymDifference(base) => format!("sym_difference:({})", class_to_token(base)),
        Family::Singleton(h) => format!("singleton:({})", hypothesis_to_token(h)),
    }
}

pub fn class_from_token(s: &str) -> Result<HypothesisClass> {
    let (family, body) = split_family(s);
    let ints = |body: &str| -> Result<Vec<usize>> { body.split(',').map(parse_num::<usize>).collect() };
    match family {
        "threshold1d" => Ok(HypothesisClass::threshold1d()),
        "interval_union" => HypothesisClass::interval_union(parse_num(body)?),
        "halfspace" => HypothesisClass::halfspace(parse_num(body)?),
        "poly_threshold" => match ints(body)?.as_slice() {
            [n, d] => HypothesisClass::poly_threshold(*n, *d),
            _ => Err(Error::Parse(format!("poly_threshold needs n,d in `{s}`"))),
        },
        "complement" | "sym_difference" => {
            let g = parse_groups(body)?;
            if g.len() != 1 {
                return Err(Error::Parse(format!("expected one base class in `{s}`")));
            }
            let base = class_from_token(g[0])?;
            Ok(if family == "complement" {
                HypothesisClass::complement(base)
            } else {
                HypothesisClass::sym_difference(base)
            })
        }
        "kfold_intersection" | "kfold_union" => {
            let parts = parse_groups(body)?
                .into_iter()
                .map(class_from_token)
                .collect::<Result<Vec<_>>>()?;
            let op = if family == "kfold_union" {
                SetOp::Union
            } else {
                SetOp::Intersection
            };
            kfold_combine(parts, op)
        }
        "singleton" => Ok(HypothesisClass::singleton(single(body)?)),
        other => Err(Error::Parse(format!("unknown class family `{other}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn class_tokens_round_trip() {
        for t in [
            "threshold1d",
            "interval_union:3",
            "halfspace:2",
            "poly_threshold:2,3",
            "complement:(threshold1d)",
            "kfold_intersection:(threshold1d)(complement:(threshold1d))",
            "kfold_union:(halfspace:2)(halfspace:2)(halfspace:2)",
            "sym_difference:(threshold1d)",
            "singleton:(threshold1d:0.5)",
        ] {
            let c = class_from_token(t).unwrap();
            assert_eq!(class_to_token(&c), t);
        }
    }

    #[test]
    fn hypothesis_token_examples() {
        assert_eq!(
            hypothesis_from_token("threshold1d:0.5").unwrap(),
            Hypothesis::threshold(0.5)
        );
        assert_eq!(
            hypothesis_from_token("halfspace:1,-1,0").unwrap(),
            Hypothesis::Halfspace {
                w: vec![1.0, -1.0],
                c: 0.0
            }
        );
        let inf = Hypothesis::threshold(f64::INFINITY);
        assert_eq!(hypothesis_from_token(&hypothesis_to_token(&inf)).unwrap(), inf);
        let t = Hypothesis::Table(BitSet::from_bools(&[true, false, false, true]));
        assert_eq!(hypothesis_from_token(&hypothesis_to_token(&t)).unwrap(), t);
    }

    #[test]
    fn malformed_tokens_are_rejected() {
        for t in [
            "",
            "bogus:1",
            "threshold1d:x",
            "halfspace:",
            "and:(threshold1d:0.5",
            "xor:(const:+1)",
        ] {
            assert!(hypothesis_from_token(t).is_err(), "{t}");
        }
        for t in ["interval_union:0", "poly_threshold:2", "nope", "kfold_union:"] {
            assert!(class_from_token(t).is_err(), "{t}");
        }
    }
}
