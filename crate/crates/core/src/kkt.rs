//! Optimality certificate for an isotonic fit.
//!
//! With the Lagrangian `(y - mu)' W (y - mu) - eta' A mu`, where
//! `(A mu)_j = mu_{j+1} - mu_j`, stationarity `-W (y - mu) - A' eta = 0`
//! determines the multipliers recursively:
//! `eta_j = sum_{i <= j} w_i (y_i - mu_i)`. A fit is optimal iff these are
//! nonnegative, vanish wherever `mu_j < mu_{j+1}`, the last partial sum
//! (which has no multiplier) is zero, and `mu` is nondecreasing.

use crate::error::{Error, Result};
use crate::sum::NeumaierSum;
use crate::types::{IsotonicFit, OrderedDataset};

#[derive(Debug, Clone, PartialEq)]
pub struct KktCertificate {
    /// `eta_1 .. eta_{n-1}`.
    pub multipliers: Vec<f64>,
    /// Most negative multiplier (0 when all are nonnegative).
    pub min_multiplier: f64,
    /// `max_j |eta_j (mu_j - mu_{j+1})|`.
    pub max_complementary_slackness: f64,
    /// `|sum_i w_i (y_i - mu_i)|`: the stationarity row without a multiplier.
    pub stationarity_residual: f64,
    /// Largest decrease `mu_j - mu_{j+1}` (0 when the fit is monotone).
    pub max_primal_violation: f64,
}

impl KktCertificate {
    pub fn holds(&self, tol: f64) -> bool {
        self.min_multiplier >= -tol
            && self.max_complementary_slackness <= tol
            && self.stationarity_residual <= tol
            && self.max_primal_violation <= 0.0
    }
}

pub fn kkt_certificate(fit: &IsotonicFit, data: &OrderedDataset) -> Result<KktCertificate> {
    if fit.n() != data.len() {
        return Err(Error::FitDataMismatch {
            fit: fit.n(),
            data: data.len(),
        });
    }
    let mu = fit.fitted_values();
    let n = mu.len();
    let mut eta = Vec::with_capacity(n.saturating_sub(1));
    let mut running = NeumaierSum::default();
    for (i, s) in data.samples().iter().enumerate() {
        running.add(s.weight * (s.response - mu[i]));
        if i + 1 < n {
            eta.push(running.value());
        }
    }
    let min_multiplier = eta.iter().copied().fold(0.0, f64::min);
    let max_complementary_slackness = eta
        .iter()
        .enumerate()
        .map(|(j, e)| (e * (mu[j] - mu[j + 1])).abs())
        .fold(0.0, f64::max);
    let max_primal_violation = mu.windows(2).map(|p| p[0] - p[1]).fold(0.0, f64::max);
    Ok(KktCertificate {
        multipliers: eta,
        min_multiplier,
        max_complementary_slackness,
        stationarity_residual: running.value().abs(),
        max_primal_violation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pav::pav_fit;
    use crate::types::Block;

    #[test]
    fn pooled_block_multipliers() {
        let data = OrderedDataset::from_ranked(&[1.0, 3.0, 2.0, 4.0], None).unwrap();
        let cert = kkt_certificate(&pav_fit(&data), &data).unwrap();
        assert_eq!(cert.multipliers, vec![0.0, 0.5, 0.0]);
        assert!(cert.holds(1e-12));
    }

    #[test]
    fn wrong_fit_fails_certificate() {
        let data = OrderedDataset::from_ranked(&[3.0, 1.0], None).unwrap();
        let fit = IsotonicFit::from_blocks(vec![
            Block { start: 0, end: 1, value: 1.0, weight: 1.0 },
            Block { start: 1, end: 2, value: 3.0, weight: 1.0 },
        ])
        .unwrap();
        let cert = kkt_certificate(&fit, &data).unwrap();
        // eta_1 = 3 - 1 = 2 but mu_1 < mu_2, so slackness fails.
        assert!(!cert.holds(1e-9));
        assert_eq!(cert.max_complementary_slackness, 4.0);
    }
}
