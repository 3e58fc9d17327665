//! Bregman losses consistent for the mean.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sum::NeumaierSum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossKind {
    Squared,
    GammaDeviance,
    Qlike,
}

impl LossKind {
    pub const ALL: [LossKind; 3] = [LossKind::Squared, LossKind::GammaDeviance, LossKind::Qlike];

    /// Gamma deviance and QLIKE are only defined for positive values.
    pub fn requires_positive(self) -> bool {
        !matches!(self, LossKind::Squared)
    }

    /// Bregman divergence `D(y, mu) = phi(y) - phi(mu) - phi'(mu) (y - mu)`.
    ///
    /// Squared uses `phi(x) = x^2`, QLIKE uses `phi(x) = -ln x`, and the gamma
    /// deviance is twice the QLIKE divergence.
    #[inline]
    pub fn divergence(self, y: f64, mu: f64) -> f64 {
        match self {
            LossKind::Squared => (y - mu) * (y - mu),
            LossKind::Qlike => {
                let r = y / mu;
                r - r.ln() - 1.0
            }
            LossKind::GammaDeviance => 2.0 * LossKind::Qlike.divergence(y, mu),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LossKind::Squared => "squared",
            LossKind::GammaDeviance => "gamma-deviance",
            LossKind::Qlike => "qlike",
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for LossKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "squared" => Ok(LossKind::Squared),
            "gamma-deviance" | "gamma" => Ok(LossKind::GammaDeviance),
            "qlike" => Ok(LossKind::Qlike),
            other => Err(format!("unknown loss kind '{other}'")),
        }
    }
}

/// Weighted mean of per-sample divergences, `sum w D(y, mu) / sum w`.
pub fn mean_loss(responses: &[f64], weights: &[f64], fitted: &[f64], loss: LossKind) -> Result<f64> {
    let n = responses.len();
    for (what, got) in [("weights", weights.len()), ("fitted", fitted.len())] {
        if got != n {
            return Err(Error::LengthMismatch {
                what,
                got,
                expected: n,
            });
        }
    }
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    if loss.requires_positive() {
        if let Some(index) = (0..n).find(|&i| !(responses[i] > 0.0 && fitted[i] > 0.0)) {
            return Err(Error::NonPositiveValue { index });
        }
    }
    let mut num = NeumaierSum::default();
    let mut den = NeumaierSum::default();
    for i in 0..n {
        num.add(weights[i] * loss.divergence(responses[i], fitted[i]));
        den.add(weights[i]);
    }
    Ok(num.value() / den.value())
}

/// `sqrt` of the weighted mean squared error.
pub fn rmse(responses: &[f64], weights: &[f64], fitted: &[f64]) -> Result<f64> {
    mean_loss(responses, weights, fitted, LossKind::Squared).map(f64::sqrt)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_fit_has_zero_loss() {
        let y = [1.0, 2.5, 4.0];
        let w = [1.0, 2.0, 0.5];
        for kind in LossKind::ALL {
            assert_eq!(mean_loss(&y, &w, &y, kind).unwrap(), 0.0);
        }
    }

    #[test]
    fn closed_form_values() {
        assert_eq!(mean_loss(&[2.0], &[1.0], &[1.0], LossKind::Squared).unwrap(), 1.0);
        let q = mean_loss(&[2.0], &[1.0], &[1.0], LossKind::Qlike).unwrap();
        assert!((q - (1.0 - 2f64.ln())).abs() < 1e-15);
        assert!((q - 0.30685).abs() < 1e-5);
        let g = mean_loss(&[2.0], &[1.0], &[1.0], LossKind::GammaDeviance).unwrap();
        assert!((g - 2.0 * q).abs() < 1e-15);
    }

    #[test]
    fn divergences_are_nonnegative() {
        for kind in LossKind::ALL {
            for &(y, mu) in &[(0.5, 2.0), (2.0, 0.5), (1.0, 1.0), (3.0, 3.1)] {
                assert!(kind.divergence(y, mu) >= 0.0, "{kind} {y} {mu}");
            }
        }
    }

    #[test]
    fn positivity_enforced() {
        assert_eq!(
            mean_loss(&[1.0, 0.0], &[1.0, 1.0], &[1.0, 1.0], LossKind::Qlike),
            Err(Error::NonPositiveValue { index: 1 })
        );
        assert_eq!(
            mean_loss(&[1.0], &[1.0], &[-1.0], LossKind::GammaDeviance),
            Err(Error::NonPositiveValue { index: 0 })
        );
        assert!(mean_loss(&[-1.0], &[1.0], &[-2.0], LossKind::Squared).is_ok());
    }

    #[test]
    fn weighted_aggregation() {
        let v = mean_loss(&[0.0, 0.0], &[1.0, 3.0], &[1.0, 2.0], LossKind::Squared).unwrap();
        assert_eq!(v, (1.0 + 12.0) / 4.0);
        assert_eq!(rmse(&[0.0], &[1.0], &[3.0]).unwrap(), 3.0);
    }
}
