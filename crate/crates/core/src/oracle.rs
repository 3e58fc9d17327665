//! Reference solvers used to cross-check [`crate::pav::pav_fit`].
//!
//! Neither shares code with the PAV implementation: [`minmax_fit`] evaluates
//! the closed-form min-max characterisation directly, and [`brute_force_fit`]
//! searches every interval partition.

use crate::error::{Error, Result};
use crate::loss::LossKind;
use crate::types::{values_tied, Block, IsotonicFit, OrderedDataset};

/// Largest input accepted by [`brute_force_fit`] (2^13 partitions).
pub const BRUTE_FORCE_MAX_N: usize = 14;

/// `mu_i = min_{l >= i} max_{k <= l} mean(y[k..=l])`, weighted.
///
/// Quadratic time: each window mean is accumulated from its right end, so no
/// prefix-sum cancellation enters the oracle.
pub fn minmax_fit(data: &OrderedDataset) -> IsotonicFit {
    let y: Vec<f64> = data.responses().collect();
    let w: Vec<f64> = data.weights().collect();
    let n = y.len();

    // upper[l] = max over k <= l of the weighted mean of y[k..=l]
    let mut upper = vec![f64::NEG_INFINITY; n];
    for (l, best) in upper.iter_mut().enumerate() {
        let (mut sy, mut sw) = (0.0, 0.0);
        for k in (0..=l).rev() {
            sy += w[k] * y[k];
            sw += w[k];
            *best = best.max(sy / sw);
        }
    }
    let mut values = vec![0.0; n];
    let mut running = f64::INFINITY;
    for i in (0..n).rev() {
        running = running.min(upper[i]);
        values[i] = running;
    }
    group_equal_values(&values, &w)
}

/// Exhaustive search over interval partitions with nondecreasing block means,
/// minimising the total weighted `loss`.
pub fn brute_force_fit(data: &OrderedDataset, loss: LossKind) -> Result<IsotonicFit> {
    let n = data.len();
    if n > BRUTE_FORCE_MAX_N {
        return Err(Error::TooLarge {
            n,
            max: BRUTE_FORCE_MAX_N,
        });
    }
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let y: Vec<f64> = data.responses().collect();
    let w: Vec<f64> = data.weights().collect();
    if loss.requires_positive() {
        if let Some(index) = y.iter().position(|&v| !(v > 0.0)) {
            return Err(Error::NonPositiveValue { index });
        }
    }

    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut fitted = vec![0.0; n];
    // Bit j of `cuts` set means a block boundary after position j.
    'partitions: for cuts in 0u32..(1u32 << (n - 1)) {
        let mut start = 0;
        let mut prev_mean = f64::NEG_INFINITY;
        for end in 1..=n {
            if end < n && cuts & (1 << (end - 1)) == 0 {
                continue;
            }
            let (sy, sw) = (start..end).fold((0.0, 0.0), |(sy, sw), j| (sy + w[j] * y[j], sw + w[j]));
            let mean = sy / sw;
            if mean < prev_mean {
                continue 'partitions;
            }
            fitted[start..end].fill(mean);
            prev_mean = mean;
            start = end;
        }
        let total: f64 = (0..n).map(|i| w[i] * loss.divergence(y[i], fitted[i])).sum();
        if best.as_ref().is_none_or(|(b, _)| total < *b) {
            best = Some((total, fitted.clone()));
        }
    }
    let (_, values) = best.expect("the single-block partition is always feasible");
    Ok(group_equal_values(&values, &w))
}

fn group_equal_values(values: &[f64], weights: &[f64]) -> IsotonicFit {
    let mut blocks: Vec<Block> = Vec::new();
    let mut start = 0;
    for end in 1..=values.len() {
        if end == values.len() || !values_tied(values[end - 1], values[end]) {
            let (sv, sw) = (start..end).fold((0.0, 0.0), |(sv, sw), j| {
                (sv + weights[j] * values[j], sw + weights[j])
            });
            blocks.push(Block {
                start,
                end,
                value: sv / sw,
                weight: sw,
            });
            start = end;
        }
    }
    IsotonicFit::from_blocks_unchecked(blocks)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ranked(ys: &[f64]) -> OrderedDataset {
        OrderedDataset::from_ranked(ys, None).unwrap()
    }

    #[test]
    fn minmax_pools_everything() {
        let fit = minmax_fit(&ranked(&[3.0, 1.0, 2.0]));
        assert_eq!(fit.fitted_values(), vec![2.0, 2.0, 2.0]);
        assert_eq!(fit.complexity(), 1);
    }

    #[test]
    fn minmax_trivial_cases() {
        assert_eq!(minmax_fit(&ranked(&[5.0])).fitted_values(), vec![5.0]);
        let ys = [-1.0, 0.5, 0.5, 2.0, 7.0];
        assert_eq!(minmax_fit(&ranked(&ys)).fitted_values(), ys.to_vec());
    }

    #[test]
    fn brute_force_squared() {
        let fit = brute_force_fit(&ranked(&[1.0, 3.0, 2.0, 4.0]), LossKind::Squared).unwrap();
        assert_eq!(fit.fitted_values(), vec![1.0, 2.5, 2.5, 4.0]);
        assert_eq!(fit.complexity(), 3);
    }

    #[test]
    fn brute_force_gamma_pools_violation() {
        let fit = brute_force_fit(&ranked(&[2.0, 1.0]), LossKind::GammaDeviance).unwrap();
        assert_eq!(fit.fitted_values(), vec![1.5, 1.5]);
    }

    #[test]
    fn brute_force_monotone_identity() {
        for kind in LossKind::ALL {
            let fit = brute_force_fit(&ranked(&[1.0, 2.0]), kind).unwrap();
            assert_eq!(fit.fitted_values(), vec![1.0, 2.0]);
        }
    }

    #[test]
    fn brute_force_limits() {
        let big = ranked(&[1.0; 15]);
        assert_eq!(
            brute_force_fit(&big, LossKind::Squared),
            Err(Error::TooLarge { n: 15, max: 14 })
        );
        assert!(brute_force_fit(&ranked(&[1.0; 14]), LossKind::Squared).is_ok());
        assert_eq!(
            brute_force_fit(&ranked(&[1.0, -1.0]), LossKind::Qlike),
            Err(Error::NonPositiveValue { index: 1 })
        );
    }
}
