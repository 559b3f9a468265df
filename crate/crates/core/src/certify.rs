//! Certifying (σ, χ)-smoothness of a dataset with respect to a query list.

use serde::Serialize;

use crate::bits::BitSet;
use crate::domain::{Dataset, Dist, SmoothnessParam};
use crate::dp::{answers, kl_project_capped_simplex, SmoothPolytope};
use crate::error::{Error, Result};

pub const DEFAULT_CERTIFY_ITERS: usize = 500;

/// A σ-smooth distribution whose answers are within `chi` of the data's on
/// every certified query.
#[derive(Debug, Clone, Serialize)]
pub struct PseudoSmoothCertificate {
    #[serde(skip)]
    pub witness: Dist,
    pub sigma: SmoothnessParam,
    pub chi: f64,
    pub query_class_id: String,
}

fn discrepancy(queries: &[BitSet], truth: &[f64], d: &Dist) -> (f64, usize, f64) {
    let mut worst = (0.0, 0, 0.0);
    for (i, (v, t)) in answers(queries, d).into_iter().zip(truth).enumerate() {
        if (v - t).abs() > worst.0 {
            worst = ((v - t).abs(), i, v - t);
        }
    }
    worst
}

/// Searches the σ-smooth polytope for a distribution close to `data` on
/// `queries`: mirror descent on the worst query, projecting every step, and
/// keeping the best iterate. The reported `chi` is what the witness achieves,
/// an upper bound on the best possible.
pub fn certify_pseudo_smooth(
    data: &Dataset,
    queries: &[BitSet],
    sigma: SmoothnessParam,
    max_iters: usize,
) -> Result<PseudoSmoothCertificate> {
    if max_iters == 0 {
        return Err(Error::param("max_iters", "need at least one iteration"));
    }
    if queries.is_empty() {
        return Err(Error::Empty("queries"));
    }
    let domain = data.domain();
    if let Some(q) = queries.iter().find(|q| q.len() != domain.len()) {
        return Err(Error::LengthMismatch {
            expected: domain.len(),
            actual: q.len(),
        });
    }
    let polytope = SmoothPolytope::new(sigma, domain.len())?;
    let empirical = data.empirical();
    let truth = answers(queries, &empirical);

    // A little uniform mass keeps the projection feasible for tiny supports.
    let start = Dist::mixture(&empirical, &Dist::uniform(domain.clone()), 0.999)?;
    let mut current = kl_project_capped_simplex(&start, &polytope)?;
    let mut best = (discrepancy(queries, &truth, &current).0, current.clone());
    let uniform = Dist::uniform(domain.clone());
    let u_chi = discrepancy(queries, &truth, &uniform).0;
    if u_chi < best.0 {
        best = (u_chi, uniform);
    }
    for t in 1..=max_iters {
        let (chi, idx, signed) = discrepancy(queries, &truth, &current);
        if chi < best.0 {
            best = (chi, current.clone());
        }
        if chi == 0.0 {
            break;
        }
        let eta = 0.5 / (t as f64).sqrt();
        let q = &queries[idx];
        let shrink = (-eta * signed.signum()).exp();
        let w: Vec<f64> = current
            .weights()
            .iter()
            .enumerate()
            .map(|(x, &p)| if q.get(x) { p * shrink } else { p })
            .collect();
        current = kl_project_capped_simplex(&Dist::from_unnormalized(domain.clone(), w)?, &polytope)?;
    }
    let (chi, _, _) = discrepancy(queries, &truth, &current);
    if chi < best.0 {
        best = (chi, current);
    }
    Ok(PseudoSmoothCertificate {
        witness: best.1,
        sigma,
        chi: best.0,
        query_class_id: format!("finite:{}", queries.len()),
    })
}
