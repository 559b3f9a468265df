use crate::domain::MASS_TOL;
use crate::error::{Error, Result};

const GRID_STEP: f64 = 1e-4;
const MAX_SWEEPS: usize = 20_000;

/// `Σ z_i log(z_i/p_i)` with `0 log 0 = 0`.
pub fn kl_objective(z: &[f64], p: &[f64]) -> f64 {
    z.iter()
        .zip(p)
        .map(|(&a, &b)| if a > 0.0 { a * (a / b).ln() } else { 0.0 })
        .sum()
}

/// `t log(t/a) + (s−t) log((s−t)/b)`.
fn pair_cost(t: f64, s: f64, a: f64, b: f64) -> f64 {
    let f = |x: f64, p: f64| if x > 0.0 { x * (x / p).ln() } else { 0.0 };
    f(t, a) + f(s - t, b)
}

/// Minimizes the pair cost on `[lo, hi]`: a scan at `GRID_STEP` spacing, then
/// golden-section search around the best grid point.
fn line_search(lo: f64, hi: f64, s: f64, a: f64, b: f64) -> f64 {
    let steps = ((hi - lo) / GRID_STEP).ceil().max(1.0) as usize;
    let at = |k: usize| (lo + k as f64 * GRID_STEP).min(hi);
    let best = (0..=steps)
        .min_by(|&x, &y| pair_cost(at(x), s, a, b).total_cmp(&pair_cost(at(y), s, a, b)))
        .unwrap_or(0);
    let (mut l, mut r) = (at(best.saturating_sub(1)), at((best + 1).min(steps)));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        if r - l < 1e-15 {
            break;
        }
        let m1 = r - g * (r - l);
        let m2 = l + g * (r - l);
        if pair_cost(m1, s, a, b) <= pair_cost(m2, s, a, b) {
            r = m2;
        } else {
            l = m1;
        }
    }
    let mid = 0.5 * (l + r);
    [lo, hi, at(best), mid]
        .into_iter()
        .min_by(|&x, &y| pair_cost(x, s, a, b).total_cmp(&pair_cost(y, s, a, b)))
        .unwrap_or(mid)
}

/// Brute-force KL projection onto `{z ≥ 0, Σz = 1, z ≤ cap}`: starts from the
/// uniform point on the support of `p` and repeatedly moves mass between
/// pairs of coordinates along a line search. Slow; meant for `N ≤ 8`.
pub fn kl_projection_grid_search(p: &[f64], cap: f64) -> Result<Vec<f64>> {
    let support: Vec<usize> = (0..p.len()).filter(|&i| p[i] > 0.0).collect();
    if (support.len() as f64) * cap < 1.0 - MASS_TOL {
        return Err(Error::Infeasible(format!("support {} below 1/cap", support.len())));
    }
    let mut z = vec![0.0; p.len()];
    for &i in &support {
        z[i] = 1.0 / support.len() as f64;
    }
    for _ in 0..MAX_SWEEPS {
        let before = kl_objective(&z, p);
        for (x, &i) in support.iter().enumerate() {
            for &j in &support[x + 1..] {
                let s = z[i] + z[j];
                let lo = (s - cap).max(0.0);
                let hi = s.min(cap);
                if hi - lo <= 0.0 {
                    continue;
                }
                let t = line_search(lo, hi, s, p[i], p[j]);
                if pair_cost(t, s, p[i], p[j]) < pair_cost(z[i], s, p[i], p[j]) {
                    z[i] = t;
                    z[j] = s - t;
                }
            }
        }
        if before - kl_objective(&z, p) < 1e-15 {
            break;
        }
    }
    Ok(z)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_hand_solutions() {
        let z = kl_projection_grid_search(&[0.9, 0.1], 0.6).unwrap();
        assert!((z[0] - 0.6).abs() < 1e-6);
        let z = kl_projection_grid_search(&[0.7, 0.2, 0.1], 0.5).unwrap();
        for (a, b) in z.iter().zip([0.5, 1.0 / 3.0, 1.0 / 6.0]) {
            assert!((a - b).abs() < 1e-5, "{z:?}");
        }
    }
}
