//! Weighted isotonic regression on a linear order by pool adjacent violators.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sum::NeumaierSum;
use crate::types::{values_tied, Block, IsotonicFit, OrderedDataset, WeightedSample};

/// How samples with equal scores are combined before fitting.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TieMergePolicy {
    /// Each of the `g` tied samples gets the group's weighted-average response
    /// and weight `(sum of group weights) / g`.
    #[default]
    WeightedAverage,
}

/// Sorts `raw` by score and merges tied scores with [`TieMergePolicy::WeightedAverage`].
pub fn merge_ties(raw: &[WeightedSample]) -> Result<OrderedDataset> {
    merge_ties_with(raw, TieMergePolicy::WeightedAverage)
}

pub fn merge_ties_with(raw: &[WeightedSample], policy: TieMergePolicy) -> Result<OrderedDataset> {
    if raw.is_empty() {
        return Err(Error::EmptyDataset);
    }
    for (i, s) in raw.iter().enumerate() {
        s.check(i)?;
    }
    let mut order: Vec<usize> = (0..raw.len()).collect();
    order.sort_by(|&a, &b| raw[a].score.total_cmp(&raw[b].score));

    let mut samples = Vec::with_capacity(raw.len());
    let mut spans = Vec::with_capacity(raw.len());
    let mut start = 0;
    while start < order.len() {
        let score = raw[order[start]].score;
        let mut end = start + 1;
        while end < order.len() && raw[order[end]].score == score {
            end += 1;
        }
        if end - start == 1 {
            samples.push(raw[order[start]]);
        } else {
            let TieMergePolicy::WeightedAverage = policy;
            let mut wy = NeumaierSum::default();
            let mut w = NeumaierSum::default();
            for &i in &order[start..end] {
                wy.add(raw[i].weight * raw[i].response);
                w.add(raw[i].weight);
            }
            let mean = wy.value() / w.value();
            let share = w.value() / (end - start) as f64;
            samples.extend((start..end).map(|_| WeightedSample::new(mean, share, score)));
        }
        spans.extend(std::iter::repeat_n(start..end, end - start));
        start = end;
    }
    Ok(OrderedDataset::from_parts(samples, order, spans))
}

/// A pool under construction: compensated running sums of `w*y` and `w`.
#[derive(Debug, Clone, Copy)]
struct Pool {
    start: usize,
    wy: NeumaierSum,
    w: NeumaierSum,
}

impl Pool {
    #[inline]
    fn single(start: usize, response: f64, weight: f64) -> Self {
        Self {
            start,
            wy: NeumaierSum::new(weight * response),
            w: NeumaierSum::new(weight),
        }
    }

    #[inline]
    fn mean(&self) -> f64 {
        self.wy.value() / self.w.value()
    }

    /// Absorbs the pool immediately to the right.
    #[inline]
    fn absorb(&mut self, right: &Pool) {
        self.wy.merge(&right.wy);
        self.w.merge(&right.w);
    }
}

/// Stack-based PAV over `(response, weight)` pairs in ranking order.
///
/// Pools only on strict violations; equal neighbours are merged in a final
/// pass so that the block count is the number of distinct fitted values.
fn pav_blocks<I>(pairs: I) -> Vec<Block>
where
    I: ExactSizeIterator<Item = (f64, f64)>,
{
    let n = pairs.len();
    let mut stack: Vec<Pool> = Vec::new();
    for (i, (y, w)) in pairs.enumerate() {
        let mut cur = Pool::single(i, y, w);
        while let Some(top) = stack.last_mut() {
            if top.mean() > cur.mean() {
                top.absorb(&cur);
                cur = stack.pop().expect("stack top exists");
            } else {
                break;
            }
        }
        stack.push(cur);
    }

    let mut merged: Vec<Pool> = Vec::with_capacity(stack.len());
    for pool in stack {
        match merged.last_mut() {
            Some(prev) if values_tied(prev.mean(), pool.mean()) => prev.absorb(&pool),
            _ => merged.push(pool),
        }
    }

    let ends = merged
        .iter()
        .skip(1)
        .map(|p| p.start)
        .chain(std::iter::once(n));
    merged
        .iter()
        .zip(ends)
        .map(|(p, end)| Block {
            start: p.start,
            end,
            value: p.mean(),
            weight: p.w.value(),
        })
        .collect()
}

/// Solves `min sum w_i (y_i - mu_i)^2` subject to `mu_1 <= ... <= mu_n`.
pub fn pav_fit(data: &OrderedDataset) -> IsotonicFit {
    let blocks = pav_blocks(data.samples().iter().map(|s| (s.response, s.weight)));
    IsotonicFit::from_blocks_unchecked(blocks)
}

/// PAV on responses that are already in ranking order.
pub fn pav_fit_ranked(responses: &[f64], weights: Option<&[f64]>) -> Result<IsotonicFit> {
    if responses.is_empty() {
        return Err(Error::EmptyDataset);
    }
    match weights {
        None => {
            if let Some(i) = responses.iter().position(|y| !y.is_finite()) {
                return Err(Error::InvalidSample {
                    index: i,
                    reason: "response is not finite",
                });
            }
            Ok(IsotonicFit::from_blocks_unchecked(pav_blocks(
                responses.iter().map(|&y| (y, 1.0)),
            )))
        }
        Some(w) => Ok(pav_fit(&OrderedDataset::from_ranked(responses, Some(w))?)),
    }
}

/// Pools block `k` (0-based) with block `k + 1`.
///
/// The pooled value is the weighted mean of the responses over the union.
/// Rejects the edit if the result would not be strictly increasing against
/// the surrounding blocks.
pub fn merge_blocks(fit: &IsotonicFit, data: &OrderedDataset, k: usize) -> Result<IsotonicFit> {
    if fit.n() != data.len() {
        return Err(Error::FitDataMismatch {
            fit: fit.n(),
            data: data.len(),
        });
    }
    let blocks = fit.blocks();
    if k + 1 >= blocks.len() {
        return Err(Error::OutOfRange {
            k,
            complexity: blocks.len(),
        });
    }
    let (left, right) = (blocks[k], blocks[k + 1]);
    let mut wy = NeumaierSum::default();
    let mut w = NeumaierSum::default();
    for s in &data.samples()[left.start..right.end] {
        wy.add(s.weight * s.response);
        w.add(s.weight);
    }
    let pooled = Block {
        start: left.start,
        end: right.end,
        value: wy.value() / w.value(),
        weight: w.value(),
    };
    let below_ok = k == 0 || blocks[k - 1].value < pooled.value;
    let above_ok = k + 2 >= blocks.len() || pooled.value < blocks[k + 2].value;
    if !(below_ok && above_ok) {
        return Err(Error::WouldBreakMonotonicity { k });
    }
    let mut out = Vec::with_capacity(blocks.len() - 1);
    out.extend_from_slice(&blocks[..k]);
    out.push(pooled);
    out.extend_from_slice(&blocks[k + 2..]);
    Ok(IsotonicFit::from_blocks_unchecked(out))
}
