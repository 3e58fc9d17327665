//! Calibration identities, loss accounting and CORP reliability diagrams.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::{mean_loss, LossKind};
use crate::pav::{merge_ties, pav_fit};
use crate::sum::NeumaierSum;
use crate::types::{IsotonicFit, OrderedDataset, WeightedSample};

/// Slack allowed when asserting that recalibration did not increase a loss.
pub const LOSS_RTOL: f64 = 1e-12;

/// Per-block comparison of the stored value against the block's weighted mean response.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationGap {
    pub block: usize,
    pub value: f64,
    pub empirical_mean: f64,
    /// `|value - empirical_mean|`.
    pub gap: f64,
    /// `gap` relative to the block's mean absolute response.
    pub relative_gap: f64,
}

fn check_lengths(fit: &IsotonicFit, data: &OrderedDataset) -> Result<()> {
    if fit.n() != data.len() {
        return Err(Error::FitDataMismatch {
            fit: fit.n(),
            data: data.len(),
        });
    }
    Ok(())
}

fn relative(gap: f64, scale: f64) -> f64 {
    if gap == 0.0 {
        0.0
    } else {
        gap / scale
    }
}

/// In-sample auto-calibration: each block value against the weighted mean of
/// the responses it covers.
pub fn check_autocalibration(fit: &IsotonicFit, data: &OrderedDataset) -> Result<Vec<CalibrationGap>> {
    check_lengths(fit, data)?;
    let samples = data.samples();
    Ok(fit
        .blocks()
        .iter()
        .enumerate()
        .map(|(k, b)| {
            let mut wy = NeumaierSum::default();
            let mut wabs = NeumaierSum::default();
            let mut w = NeumaierSum::default();
            for s in &samples[b.range()] {
                wy.add(s.weight * s.response);
                wabs.add(s.weight * s.response.abs());
                w.add(s.weight);
            }
            let empirical_mean = wy.value() / w.value();
            let gap = (b.value - empirical_mean).abs();
            CalibrationGap {
                block: k,
                value: b.value,
                empirical_mean,
                gap,
                relative_gap: relative(gap, wabs.value() / w.value()),
            }
        })
        .collect())
}

/// Global balance: `sum w_i mu_i - sum w_i y_i`.
pub fn balance_gap(fit: &IsotonicFit, data: &OrderedDataset) -> Result<f64> {
    check_lengths(fit, data)?;
    let samples = data.samples();
    let mut fitted = NeumaierSum::default();
    for b in fit.blocks() {
        for s in &samples[b.range()] {
            fitted.add(s.weight * b.value);
        }
    }
    let mut total = fitted;
    total.add(-data.weighted_response_sum());
    Ok(total.value())
}

/// [`balance_gap`] divided by `sum w_i |y_i|`.
pub fn relative_balance_gap(fit: &IsotonicFit, data: &OrderedDataset) -> Result<f64> {
    let gap = balance_gap(fit, data)?.abs();
    let scale: NeumaierSum = data.samples().iter().map(|s| s.weight * s.response.abs()).collect();
    Ok(relative(gap, scale.value()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossComparison {
    pub kind: LossKind,
    /// In-sample loss using the raw scores as predictions.
    pub before: f64,
    /// In-sample loss of the recalibrated predictions.
    pub after: f64,
    pub non_increasing: bool,
}

/// Table-style summary of in-sample fit before and after recalibration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub comparisons: Vec<LossComparison>,
    pub rmse_before: f64,
    pub rmse_after: f64,
    pub average_response: f64,
    pub average_before: f64,
    pub average_after: f64,
}

impl LossReport {
    pub fn all_non_increasing(&self) -> bool {
        self.comparisons.iter().all(|c| c.non_increasing)
    }

    pub fn get(&self, kind: LossKind) -> Option<&LossComparison> {
        self.comparisons.iter().find(|c| c.kind == kind)
    }
}

fn weighted_average(values: &[f64], weights: &[f64]) -> f64 {
    let num: NeumaierSum = values.iter().zip(weights).map(|(v, w)| v * w).collect();
    let den: NeumaierSum = weights.iter().copied().collect();
    num.value() / den.value()
}

/// Compares in-sample losses of `before` (typically the raw scores) and
/// `after` (the recalibrated predictions) for every applicable loss.
///
/// Gamma deviance and QLIKE are included only when responses and both
/// prediction vectors are strictly positive.
pub fn loss_improvement_check(
    responses: &[f64],
    weights: &[f64],
    before: &[f64],
    after: &[f64],
) -> Result<LossReport> {
    let positive = [responses, before, after]
        .iter()
        .all(|v| v.iter().all(|&x| x > 0.0));
    let mut comparisons = Vec::new();
    for kind in LossKind::ALL {
        if kind.requires_positive() && !positive {
            continue;
        }
        let b = mean_loss(responses, weights, before, kind)?;
        let a = mean_loss(responses, weights, after, kind)?;
        comparisons.push(LossComparison {
            kind,
            before: b,
            after: a,
            non_increasing: a <= b + LOSS_RTOL * b.abs().max(f64::MIN_POSITIVE),
        });
    }
    let squared = &comparisons[0];
    Ok(LossReport {
        rmse_before: squared.before.sqrt(),
        rmse_after: squared.after.sqrt(),
        average_response: weighted_average(responses, weights),
        average_before: weighted_average(before, weights),
        average_after: weighted_average(after, weights),
        comparisons,
    })
}

/// One point of a CORP mean reliability diagram.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityPoint {
    /// Weighted mean prediction within the block.
    pub prediction: f64,
    /// Isotonic conditional mean of the outcomes for the block.
    pub conditional_mean: f64,
    pub weight: f64,
}

/// Isotonic regression of outcomes on predictions; one point per block.
///
/// An auto-calibrated predictor gives points on the diagonal.
pub fn reliability_points(
    predictions: &[f64],
    outcomes: &[f64],
    weights: &[f64],
) -> Result<Vec<ReliabilityPoint>> {
    let n = predictions.len();
    for (what, got) in [("outcomes", outcomes.len()), ("weights", weights.len())] {
        if got != n {
            return Err(Error::LengthMismatch {
                what,
                got,
                expected: n,
            });
        }
    }
    let raw: Vec<WeightedSample> = (0..n)
        .map(|i| WeightedSample::new(outcomes[i], weights[i], predictions[i]))
        .collect();
    let data = merge_ties(&raw)?;
    let fit = pav_fit(&data);
    let samples = data.samples();
    Ok(fit
        .blocks()
        .iter()
        .map(|b| {
            let mut ws = NeumaierSum::default();
            let mut w = NeumaierSum::default();
            for s in &samples[b.range()] {
                ws.add(s.weight * s.score);
                w.add(s.weight);
            }
            ReliabilityPoint {
                prediction: ws.value() / w.value(),
                conditional_mean: b.value,
                weight: b.weight,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Block;

    fn ranked(ys: &[f64], ws: Option<&[f64]>) -> OrderedDataset {
        OrderedDataset::from_ranked(ys, ws).unwrap()
    }

    #[test]
    fn pooled_fit_is_calibrated() {
        let data = ranked(&[3.0, 1.0, 2.0], None);
        let fit = pav_fit(&data);
        let gaps = check_autocalibration(&fit, &data).unwrap();
        assert_eq!(gaps.len(), 1);
        assert_eq!(gaps[0].gap, 0.0);
        assert_eq!(balance_gap(&fit, &data).unwrap(), 0.0);
    }

    #[test]
    fn wrong_block_value_shows_gap() {
        let data = ranked(&[3.0, 1.0, 2.0], None);
        let fit = IsotonicFit::from_blocks(vec![Block { start: 0, end: 3, value: 2.1, weight: 3.0 }]).unwrap();
        let gaps = check_autocalibration(&fit, &data).unwrap();
        assert!((gaps[0].gap - 0.1).abs() < 1e-12);
    }

    #[test]
    fn shifted_fit_balance_equals_total_weight() {
        let ws = [1.0, 0.5, 2.0];
        let data = ranked(&[1.0, 3.0, 2.0], Some(&ws));
        let fit = pav_fit(&data);
        let shifted = IsotonicFit::from_blocks(
            fit.blocks()
                .iter()
                .map(|b| Block { value: b.value + 1.0, ..*b })
                .collect(),
        )
        .unwrap();
        assert!((balance_gap(&shifted, &data).unwrap() - 3.5).abs() < 1e-12);
    }

    #[test]
    fn weighted_balance_example() {
        let data = ranked(&[4.0, 2.0], Some(&[1.0, 3.0]));
        let fit = pav_fit(&data);
        assert_eq!(fit.block_values(), vec![2.5]);
        assert_eq!(balance_gap(&fit, &data).unwrap(), 0.0);
    }

    #[test]
    fn mismatched_fit_rejected() {
        let data = ranked(&[1.0, 2.0], None);
        let fit = pav_fit(&ranked(&[1.0], None));
        assert!(matches!(check_autocalibration(&fit, &data), Err(Error::FitDataMismatch { .. })));
        assert!(matches!(balance_gap(&fit, &data), Err(Error::FitDataMismatch { .. })));
    }

    #[test]
    fn loss_report_equal_when_already_isotonic() {
        let y = [1.0, 2.0, 3.0];
        let w = [1.0; 3];
        let report = loss_improvement_check(&y, &w, &y, &y).unwrap();
        assert_eq!(report.comparisons.len(), 3);
        for c in &report.comparisons {
            assert_eq!(c.before, c.after);
            assert!(c.non_increasing);
        }
    }

    #[test]
    fn loss_report_strict_improvement_on_reversed_ranking() {
        // Scores rank the responses backwards: 3, 2, 1.
        let y = [3.0, 2.0, 1.0];
        let w = [1.0; 3];
        let scores = [1.0, 2.0, 3.0];
        let raw: Vec<_> = (0..3).map(|i| WeightedSample::unit(y[i], scores[i])).collect();
        let data = merge_ties(&raw).unwrap();
        let after = pav_fit(&data).fitted_values();
        let report = loss_improvement_check(&y, &w, &scores, &after).unwrap();
        let sq = report.get(LossKind::Squared).unwrap();
        assert!(sq.after < sq.before);
        assert!(report.all_non_increasing());
    }

    #[test]
    fn loss_report_constant_target() {
        let y = [5.0; 4];
        let w = [1.0; 4];
        let scores = [10.0, 20.0, 30.0, 40.0];
        let report = loss_improvement_check(&y, &w, &scores, &y).unwrap();
        for c in &report.comparisons {
            assert_eq!(c.after, 0.0);
            assert!(c.before > 0.0);
        }
    }

    #[test]
    fn loss_report_skips_positive_only_kinds() {
        let report = loss_improvement_check(&[-1.0, 1.0], &[1.0, 1.0], &[0.0, 0.0], &[0.0, 0.0]).unwrap();
        assert_eq!(report.comparisons.len(), 1);
        assert_eq!(report.comparisons[0].kind, LossKind::Squared);
    }

    #[test]
    fn reliability_identity_on_diagonal() {
        let v = [1.0, 2.0, 2.0, 5.0];
        let pts = reliability_points(&v, &v, &[1.0; 4]).unwrap();
        assert_eq!(pts.len(), 3);
        for p in pts {
            assert_eq!(p.prediction, p.conditional_mean);
        }
    }

    #[test]
    fn reliability_constant_prediction() {
        let pts = reliability_points(&[4.0; 3], &[1.0, 2.0, 6.0], &[1.0; 3]).unwrap();
        assert_eq!(pts.len(), 1);
        assert_eq!(pts[0].prediction, 4.0);
        assert_eq!(pts[0].conditional_mean, 3.0);
    }

    #[test]
    fn reliability_single_pool() {
        let pts = reliability_points(&[1.0, 2.0], &[2.0, 1.0], &[1.0, 1.0]).unwrap();
        assert_eq!(pts.len(), 1);
        assert_eq!((pts[0].prediction, pts[0].conditional_mean), (1.5, 1.5));
    }

    #[test]
    fn reliability_length_mismatch() {
        assert!(matches!(
            reliability_points(&[1.0], &[1.0, 2.0], &[1.0]),
            Err(Error::LengthMismatch { what: "outcomes", .. })
        ));
    }
}
