//! Fixed-length bit vectors used for extensional hypotheses, queries and
//! bracket endpoints. All comparisons are exact integer operations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BitSet {
    len: usize,
    words: Vec<u64>,
}

impl std::fmt::Debug for BitSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s: String = (0..self.len).map(|i| if self.get(i) { '1' } else { '0' }).collect();
        write!(f, "BitSet({s})")
    }
}

impl BitSet {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut b = Self {
            len,
            words: vec![u64::MAX; len.div_ceil(64)],
        };
        b.clear_tail();
        b
    }

    pub fn from_fn(len: usize, mut f: impl FnMut(usize) -> bool) -> Self {
        let mut b = Self::zeros(len);
        for i in 0..len {
            if f(i) {
                b.set(i, true);
            }
        }
        b
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        Self::from_fn(bits.len(), |i| bits[i])
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i >> 6] >> (i & 63)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        let mask = 1u64 << (i & 63);
        if value {
            self.words[i >> 6] |= mask;
        } else {
            self.words[i >> 6] &= !mask;
        }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let tz = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(wi * 64 + tz)
                }
            })
        })
    }

    fn check_len(&self, other: &Self) -> Result<()> {
        if self.len != other.len {
            return Err(Error::LengthMismatch {
                expected: self.len,
                actual: other.len,
            });
        }
        Ok(())
    }

    fn zip_with(&self, other: &Self, f: impl Fn(u64, u64) -> u64) -> Result<Self> {
        self.check_len(other)?;
        let mut out = Self {
            len: self.len,
            words: self.words.iter().zip(&other.words).map(|(&a, &b)| f(a, b)).collect(),
        };
        out.clear_tail();
        Ok(out)
    }

    pub fn and(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a & b)
    }

    pub fn or(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a | b)
    }

    pub fn xor(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a ^ b)
    }

    pub fn not(&self) -> Self {
        let mut out = Self {
            len: self.len,
            words: self.words.iter().map(|w| !w).collect(),
        };
        out.clear_tail();
        out
    }

    /// `self ⪯ other` pointwise.
    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.len == other.len && self.words.iter().zip(&other.words).all(|(&a, &b)| a & !b == 0)
    }

    /// First index where `self` is set and `other` is not.
    pub fn first_excess(&self, other: &Self) -> Option<usize> {
        self.words
            .iter()
            .zip(&other.words)
            .enumerate()
            .find_map(|(wi, (&a, &b))| {
                let d = a & !b;
                (d != 0).then(|| wi * 64 + d.trailing_zeros() as usize)
            })
    }

    /// Sum of `weights[i]` over set bits.
    pub fn weighted_count(&self, weights: &[f64]) -> f64 {
        debug_assert_eq!(weights.len(), self.len);
        self.iter_ones().map(|i| weights[i]).sum()
    }

    /// Run-length encoding: the first bit followed by run lengths, e.g. `0:3,5,2`.
    pub fn to_rle(&self) -> String {
        if self.len == 0 {
            return "0:".to_string();
        }
        let mut runs = Vec::new();
        let mut cur = self.get(0);
        let first = cur;
        let mut run = 0usize;
        for i in 0..self.len {
            let b = self.get(i);
            if b == cur {
                run += 1;
            } else {
                runs.push(run);
                cur = b;
                run = 1;
            }
        }
        runs.push(run);
        let body: Vec<String> = runs.iter().map(|r| r.to_string()).collect();
        format!("{}:{}", u8::from(first), body.join(","))
    }

    pub fn from_rle(s: &str) -> Result<Self> {
        let (first, body) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("bad run-length token `{s}`")))?;
        let mut bit = match first {
            "0" => false,
            "1" => true,
            _ => return Err(Error::Parse(format!("bad leading bit in `{s}`"))),
        };
        let runs: Vec<usize> = if body.is_empty() {
            Vec::new()
        } else {
            body.split(',')
                .map(|r| {
                    r.parse::<usize>()
                        .map_err(|e| Error::Parse(format!("bad run `{r}`: {e}")))
                })
                .collect::<Result<_>>()?
        };
        let len = runs.iter().sum();
        let mut out = Self::zeros(len);
        let mut pos = 0;
        for r in runs {
            if bit {
                for i in pos..pos + r {
                    out.set(i, true);
                }
            }
            pos += r;
            bit = !bit;
        }
        Ok(out)
    }

    fn clear_tail(&mut self) {
        let rem = self.len % 64;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ones_has_clean_tail() {
        let b = BitSet::ones(70);
        assert_eq!(b.count_ones(), 70);
        assert_eq!(b.not().count_ones(), 0);
    }

    #[test]
    fn subset_and_excess() {
        let a = BitSet::from_bools(&[false, true, false, true]);
        let b = BitSet::from_bools(&[true, true, false, true]);
        assert!(a.is_subset_of(&b));
        assert!(!b.is_subset_of(&a));
        assert_eq!(b.first_excess(&a), Some(0));
        assert_eq!(a.first_excess(&b), None);
    }

    #[test]
    fn rle_example() {
        let b = BitSet::from_bools(&[false, false, false, true, true, false]);
        assert_eq!(b.to_rle(), "0:3,2,1");
    }

    proptest! {
        #[test]
        fn rle_round_trip(bits in proptest::collection::vec(any::<bool>(), 0..300)) {
            let b = BitSet::from_bools(&bits);
            prop_assert_eq!(BitSet::from_rle(&b.to_rle()).unwrap(), b);
        }

        #[test]
        fn iter_ones_matches_get(bits in proptest::collection::vec(any::<bool>(), 0..300)) {
            let b = BitSet::from_bools(&bits);
            let ones: Vec<usize> = b.iter_ones().collect();
            let expect: Vec<usize> = (0..bits.len()).filter(|&i| bits[i]).collect();
            prop_assert_eq!(ones, expect);
        }
    }
}
