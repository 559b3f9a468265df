//! Dense phase-one simplex for deciding strict linear separability.
//!
//! Pivoting follows Bland's rule, so results are reproducible bit-for-bit.

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-10;
const FEAS_TOL: f64 = 1e-8;
const MAX_PIVOTS: usize = 200_000;

/// Finds `f ∈ ℝ^d` with `⟨a_i, f⟩ ≥ 1` for every row, or `None` if the system
/// is infeasible.
pub(crate) fn feasible_point(rows: &[Vec<f64>], d: usize) -> Result<Option<Vec<f64>>> {
    if rows.is_empty() {
        return Ok(Some(vec![0.0; d]));
    }
    let m = rows.len();
    // Columns: u (d), v (d), surplus (m), artificial (m), rhs.
    let nv = 2 * d;
    let cols = nv + 2 * m;
    let width = cols + 1;
    let mut t = vec![0.0; (m + 1) * width];
    let mut basis: Vec<usize> = (0..m).map(|i| nv + m + i).collect();
    for (i, a) in rows.iter().enumerate() {
        debug_assert_eq!(a.len(), d);
        let r = &mut t[i * width..(i + 1) * width];
        for j in 0..d {
            r[j] = a[j];
            r[d + j] = -a[j];
        }
        r[nv + i] = -1.0;
        r[nv + m + i] = 1.0;
        r[cols] = 1.0;
    }
    // Objective row holds reduced costs of minimizing the artificial sum.
    {
        let (body, obj) = t.split_at_mut(m * width);
        for i in 0..m {
            let r = &body[i * width..(i + 1) * width];
            for j in 0..width {
                obj[j] -= r[j];
            }
        }
        for i in 0..m {
            obj[nv + m + i] = 0.0;
        }
    }

    for _ in 0..MAX_PIVOTS {
        // Bland's rule over columns that can actually pivot. Phase one is
        // bounded below, so a negative reduced cost with no positive entry is
        // roundoff on a zero cost and the column is skipped.
        let obj = &t[m * width..];
        let step = (0..cols)
            .filter(|&j| obj[j] < -PIVOT_TOL)
            .find_map(|j| leaving_row(&t, width, m, &basis, j).map(|row| (j, row)));
        let Some((enter, row)) = step else {
            let residual = -t[m * width + cols];
            if residual > FEAS_TOL {
                return Ok(None);
            }
            let mut z = vec![0.0; cols];
            for (i, &b) in basis.iter().enumerate() {
                z[b] = t[i * width + cols];
            }
            return Ok(Some((0..d).map(|j| z[j] - z[d + j]).collect()));
        };
        pivot(&mut t, width, m, row, enter);
        basis[row] = enter;
    }
    Err(Error::Infeasible("simplex pivot limit reached".into()))
}

/// Minimum-ratio row for entering column `col`, ties to the smaller basic
/// index.
fn leaving_row(t: &[f64], width: usize, m: usize, basis: &[usize], col: usize) -> Option<usize> {
    let cols = width - 1;
    let mut leave: Option<(usize, f64)> = None;
    for i in 0..m {
        let a = t[i * width + col];
        if a > PIVOT_TOL {
            let ratio = t[i * width + cols] / a;
            leave = match leave {
                Some((li, lr)) if !(ratio < lr - 1e-12 || (ratio <= lr + 1e-12 && basis[i] < basis[li])) => {
                    Some((li, lr))
                }
                _ => Some((i, ratio)),
            };
        }
    }
    leave.map(|(i, _)| i)
}

fn pivot(t: &mut [f64], width: usize, m: usize, row: usize, col: usize) {
    let p = t[row * width + col];
    for j in 0..width {
        t[row * width + j] /= p;
    }
    let pivot_row: Vec<f64> = t[row * width..(row + 1) * width].to_vec();
    for i in 0..=m {
        if i == row {
            continue;
        }
        let f = t[i * width + col];
        if f != 0.0 {
            let r = &mut t[i * width..(i + 1) * width];
            for j in 0..width {
                r[j] -= f * pivot_row[j];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable_system() {
        // f_0 >= 1, -f_0 + f_1 >= 1
        let rows = vec![vec![1.0, 0.0], vec![-1.0, 1.0]];
        let f = feasible_point(&rows, 2).unwrap().unwrap();
        for r in &rows {
            let v: f64 = r.iter().zip(&f).map(|(a, b)| a * b).sum();
            assert!(v >= 1.0 - 1e-9);
        }
    }

    #[test]
    fn contradictory_system() {
        let rows = vec![vec![1.0], vec![-1.0]];
        assert_eq!(feasible_point(&rows, 1).unwrap(), None);
    }
}
