use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hedge over `K` experts with a fixed horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HedgeState {
    weights: Vec<f64>,
    eta: f64,
    t: usize,
    horizon: usize,
}

impl HedgeState {
    /// Uniform weights and `η = √(8 ln K / T)`. A single expert gets
    /// `η = √(8 / T)`; its weight is 1 regardless.
    pub fn new(k: usize, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::param("horizon", "need T ≥ 1"));
        }
        let log_k = if k > 1 { (k as f64).ln() } else { 1.0 };
        Self::with_eta(k, (8.0 * log_k / horizon as f64).sqrt(), horizon)
    }

    pub fn with_eta(k: usize, eta: f64, horizon: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Empty("experts"));
        }
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::param("eta", format!("must be positive, got {eta}")));
        }
        Ok(Self {
            weights: vec![1.0 / k as f64; k],
            eta,
            t: 0,
            horizon,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn round(&self) -> usize {
        self.t
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `w_i ← w_i · exp(−η ℓ_i)`, renormalized.
    pub fn update(&mut self, losses: &[f64]) -> Result<()> {
        if losses.len() != self.weights.len() {
            return Err(Error::LengthMismatch {
                expected: self.weights.len(),
                actual: losses.len(),
            });
        }
        // Shift by the smallest loss so the largest factor is exactly 1.
        let min = losses.iter().copied().fold(f64::INFINITY, f64::min);
        let mut z = 0.0;
        for (w, &l) in self.weights.iter_mut().zip(losses) {
            *w *= (-self.eta * (l - min)).exp();
            z += *w;
        }
        for w in &mut self.weights {
            *w /= z;
        }
        self.t += 1;
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (i, &w) in self.weights.iter().enumerate() {
            acc += w;
            if u < acc {
                return i;
            }
        }
        self.weights
            .iter()
            .rposition(|&w| w > 0.0)
            .unwrap_or(self.weights.len() - 1)
    }

    pub fn expected_loss(&self, losses: &[f64]) -> f64 {
        self.weights.iter().zip(losses).map(|(w, l)| w * l).sum()
    }
}

/// Functional form of [`HedgeState::update`].
pub fn hedge_update(state: &HedgeState, losses: &[f64]) -> Result<HedgeState> {
    let mut next = state.clone();
    next.update(losses)?;
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zero_losses_leave_weights() {
        let s = HedgeState::new(4, 100).unwrap();
        let n = hedge_update(&s, &[0.0; 4]).unwrap();
        assert_eq!(n.weights(), s.weights());
        assert_eq!(n.round(), 1);
    }

    #[test]
    fn two_expert_example() {
        let s = HedgeState::with_eta(2, 2f64.ln(), 10).unwrap();
        let n = hedge_update(&s, &[1.0, 0.0]).unwrap();
        assert_relative_eq!(n.weights()[0], 1.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(n.weights()[1], 2.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn repeated_loss_decays_monotonically() {
        let mut s = HedgeState::new(2, 1000).unwrap();
        let mut prev = s.weights()[0];
        for _ in 0..1000 {
            s.update(&[1.0, 0.0]).unwrap();
            assert!(s.weights()[0] < prev);
            prev = s.weights()[0];
        }
        assert!(prev < 1e-10);
    }

    #[test]
    fn tuned_rate_and_errors() {
        let s = HedgeState::new(8, 4000).unwrap();
        assert_relative_eq!(s.eta(), (8.0 * 8f64.ln() / 4000.0).sqrt());
        let mut s = s;
        assert!(s.update(&[0.0; 3]).is_err());
        assert!(HedgeState::new(0, 10).is_err());
        assert!(HedgeState::new(3, 0).is_err());
    }
}
