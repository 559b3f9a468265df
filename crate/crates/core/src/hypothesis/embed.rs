//! Monomial feature map used to embed polynomial thresholds as halfspaces.

/// All monomials of total degree `1..=degree` in graded lexicographic order.
///
/// For `x = (x1, x2)` and degree 2 this is `(x1, x2, x1², x1·x2, x2²)`. The
/// constant monomial is omitted; a halfspace offset absorbs it.
pub fn monomial_embed(x: &[f64], degree: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(monomial_count(x.len(), degree));
    let mut idx = Vec::with_capacity(degree);
    for d in 1..=degree {
        idx.clear();
        idx.resize(d, 0);
        push_combinations(x, &mut idx, 0, 0, &mut out);
    }
    out
}

// Non-decreasing index tuples of fixed length, in lexicographic order.
fn push_combinations(x: &[f64], idx: &mut Vec<usize>, pos: usize, start: usize, out: &mut Vec<f64>) {
    if pos == idx.len() {
        out.push(idx.iter().map(|&i| x[i]).product());
        return;
    }
    for i in start..x.len() {
        idx[pos] = i;
        push_combinations(x, idx, pos + 1, i, out);
    }
}

/// `C(n + d, d) - 1`: the number of non-constant monomials of degree ≤ d.
pub fn monomial_count(n: usize, degree: usize) -> usize {
    binomial(n + degree, degree) as usize - 1
}

pub(crate) fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}
