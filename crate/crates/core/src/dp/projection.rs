use serde::{Deserialize, Serialize};

use crate::domain::{Dist, SmoothnessParam, MASS_TOL};
use crate::error::{Error, Result};

/// `{z : z ≥ 0, Σz = 1, z_i ≤ 1/(σN)}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothPolytope {
    sigma: f64,
    n: usize,
    cap: f64,
}

impl SmoothPolytope {
    pub fn new(sigma: SmoothnessParam, n: usize) -> Result<Self> {
        Self::from_cap(n, sigma.cap(n))
    }

    /// Polytope with an explicit per-coordinate cap.
    pub fn from_cap(n: usize, cap: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Empty("polytope coordinates"));
        }
        if !(cap > 0.0 && cap.is_finite()) {
            return Err(Error::param("cap", format!("must be positive, got {cap}")));
        }
        if cap * (n as f64) < 1.0 - MASS_TOL {
            return Err(Error::Infeasible(format!("cap {cap} times {n} coordinates is below 1")));
        }
        Ok(Self {
            sigma: 1.0 / (cap * n as f64),
            n,
            cap,
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn cap(&self) -> f64 {
        self.cap
    }

    pub fn contains(&self, z: &[f64]) -> bool {
        z.len() == self.n
            && z.iter().all(|&w| (0.0..=self.cap).contains(&w))
            && (z.iter().sum::<f64>() - 1.0).abs() <= MASS_TOL
    }
}

/// KL projection of `p` onto the capped simplex, returned with the scale `c`
/// such that `z_i = min(c·p_i, cap)`.
pub fn water_fill(p: &[f64], cap: f64) -> Result<(Vec<f64>, f64)> {
    let mut order: Vec<usize> = (0..p.len()).filter(|&i| p[i] > 0.0).collect();
    if (order.len() as f64) * cap < 1.0 - MASS_TOL {
        return Err(Error::Infeasible(format!(
            "{} atoms carry mass but cap {cap} needs at least {}",
            order.len(),
            (1.0 / cap).ceil()
        )));
    }
    order.sort_by(|&a, &b| p[b].total_cmp(&p[a]).then(a.cmp(&b)));
    // suffix[k] = mass of the coordinates left uncapped when the top k are capped
    let mut suffix = vec![0.0; order.len() + 1];
    for k in (0..order.len()).rev() {
        suffix[k] = suffix[k + 1] + p[order[k]];
    }
    let mut z = vec![0.0; p.len()];
    for k in 0..order.len() {
        let c = (1.0 - k as f64 * cap) / suffix[k];
        if c * p[order[k]] <= cap {
            for (j, &i) in order.iter().enumerate() {
                z[i] = if j < k { cap } else { c * p[i] };
            }
            return Ok((z, c));
        }
    }
    // Every positive coordinate sits at the cap, so cap·|support| = 1.
    for &i in &order {
        z[i] = cap;
    }
    let c = cap / p[order[order.len() - 1]];
    Ok((z, c))
}

/// `argmin_{z ∈ K} KL(z ‖ p)`, exactly inside the polytope.
pub fn kl_project_capped_simplex(p: &Dist, polytope: &SmoothPolytope) -> Result<Dist> {
    if p.len() != polytope.n() {
        return Err(Error::LengthMismatch {
            expected: polytope.n(),
            actual: p.len(),
        });
    }
    let (z, _) = water_fill(p.weights(), polytope.cap())?;
    Dist::new(p.domain().clone(), z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Domain;
    use proptest::prelude::*;
    use std::sync::Arc;

    fn dist(w: &[f64]) -> Dist {
        Dist::new(Arc::new(Domain::unit_grid(w.len()).unwrap()), w.to_vec()).unwrap()
    }

    #[test]
    fn spec_examples() {
        let k = SmoothPolytope::from_cap(2, 0.6).unwrap();
        let z = kl_project_capped_simplex(&dist(&[0.9, 0.1]), &k).unwrap();
        assert!((z.weights()[0] - 0.6).abs() < 1e-12 && (z.weights()[1] - 0.4).abs() < 1e-12);

        let k = SmoothPolytope::from_cap(3, 0.5).unwrap();
        let (z, c) = water_fill(&[0.7, 0.2, 0.1], 0.5).unwrap();
        assert!((c - 5.0 / 3.0).abs() < 1e-12);
        for (a, b) in z.iter().zip([0.5, 1.0 / 3.0, 1.0 / 6.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(k.contains(&z));

        let p = dist(&[0.3, 0.3, 0.4]);
        let z = kl_project_capped_simplex(&p, &k).unwrap();
        assert_eq!(z.weights(), p.weights());
    }

    #[test]
    fn infeasible_cases() {
        assert!(SmoothPolytope::from_cap(3, 0.3).is_err());
        assert!(water_fill(&[0.5, 0.5, 0.0, 0.0], 0.3).is_err());
        let (z, _) = water_fill(&[0.5, 0.5, 0.0, 0.0], 0.5).unwrap();
        assert_eq!(z, vec![0.5, 0.5, 0.0, 0.0]);
        let sigma = SmoothnessParam::new(0.5).unwrap();
        assert_eq!(SmoothPolytope::new(sigma, 10).unwrap().cap(), 0.2);
    }

    proptest! {
        #[test]
        fn kkt_structure(raw in prop::collection::vec(0.0f64..1.0, 2..12), cap_scale in 1.0f64..3.0) {
            let s: f64 = raw.iter().sum();
            prop_assume!(s > 1e-6);
            let p: Vec<f64> = raw.iter().map(|w| w / s).collect();
            let support = p.iter().filter(|&&w| w > 0.0).count();
            let cap = cap_scale / support as f64;
            let (z, c) = water_fill(&p, cap).unwrap();
            prop_assert!(c >= 1.0 - 1e-12);
            let poly = SmoothPolytope::from_cap(p.len(), cap).unwrap();
            prop_assert!(poly.contains(&z));
            for (zi, pi) in z.iter().zip(&p) {
                prop_assert!((zi - (c * pi).min(cap)).abs() < 1e-12);
            }
        }
    }
}
