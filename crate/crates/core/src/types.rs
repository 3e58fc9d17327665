//! Domain types shared by the solver, the recalibrator and the diagnostics.
//!
//! Indices are 0-based and block ranges are half-open in storage. A block
//! covering `start..end` corresponds to the 1-based inclusive interval
//! `start + 1 ..= end`, so the stored `end` values are exactly the slicing
//! points `i_1 < ... < i_K = n`.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sum::NeumaierSum;

/// Relative tolerance under which two adjacent block values count as equal
/// when the solver performs its final merge of tied blocks.
pub const TIE_RTOL: f64 = 1e-12;

/// `true` when `a` and `b` agree to within [`TIE_RTOL`] relative error.
pub fn values_tied(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIE_RTOL * a.abs().max(b.abs())
}

/// One observation: response `y_i`, case weight `w_i` and candidate score `pi(x_i)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedSample {
    pub response: f64,
    pub weight: f64,
    pub score: f64,
}

impl WeightedSample {
    pub fn new(response: f64, weight: f64, score: f64) -> Self {
        Self {
            response,
            weight,
            score,
        }
    }

    /// Unit-weight sample.
    pub fn unit(response: f64, score: f64) -> Self {
        Self::new(response, 1.0, score)
    }

    /// Returns the reason this sample is invalid, if any.
    pub fn defect(&self) -> Option<&'static str> {
        if !self.response.is_finite() {
            Some("response is not finite")
        } else if !self.score.is_finite() {
            Some("score is not finite")
        } else if !self.weight.is_finite() {
            Some("weight is not finite")
        } else if self.weight <= 0.0 {
            Some("weight is not positive")
        } else {
            None
        }
    }

    pub(crate) fn check(&self, index: usize) -> Result<()> {
        match self.defect() {
            Some(reason) => Err(Error::InvalidSample { index, reason }),
            None => Ok(()),
        }
    }
}

/// Samples sorted by score, ready for the PAV solver.
///
/// Scores are nondecreasing. Samples sharing a score form a tie group whose
/// members carry identical responses and weights (the weighted-average tie
/// rule), so the solver never splits them. Each position remembers which raw
/// input rows it stands for.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderedDataset {
    samples: Vec<WeightedSample>,
    provenance: Option<Provenance>,
}

/// Raw row indices in sorted order, plus the span of that list each position
/// absorbed. Absent means position `i` is raw row `i`.
#[derive(Debug, Clone, PartialEq)]
struct Provenance {
    order: Vec<usize>,
    spans: Vec<Range<usize>>,
}

impl OrderedDataset {
    /// Builds a dataset from samples whose scores are already strictly increasing.
    pub fn from_sorted(samples: Vec<WeightedSample>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyDataset);
        }
        for (i, s) in samples.iter().enumerate() {
            s.check(i)?;
            if i > 0 && samples[i - 1].score >= s.score {
                return Err(Error::InvalidSample {
                    index: i,
                    reason: "scores are not strictly increasing",
                });
            }
        }
        Ok(Self {
            samples,
            provenance: None,
        })
    }

    /// Responses already in ranking order; the score of sample `i` is `i`.
    pub fn from_ranked(responses: &[f64], weights: Option<&[f64]>) -> Result<Self> {
        if let Some(w) = weights {
            if w.len() != responses.len() {
                return Err(Error::LengthMismatch {
                    what: "weights",
                    got: w.len(),
                    expected: responses.len(),
                });
            }
        }
        let samples = responses
            .iter()
            .enumerate()
            .map(|(i, &y)| WeightedSample::new(y, weights.map_or(1.0, |w| w[i]), i as f64))
            .collect();
        Self::from_sorted(samples)
    }

    pub(crate) fn from_parts(
        samples: Vec<WeightedSample>,
        order: Vec<usize>,
        spans: Vec<Range<usize>>,
    ) -> Self {
        debug_assert_eq!(samples.len(), spans.len());
        Self {
            samples,
            provenance: Some(Provenance { order, spans }),
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[WeightedSample] {
        &self.samples
    }

    pub fn responses(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.response)
    }

    pub fn weights(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.weight)
    }

    pub fn scores(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.score)
    }

    pub fn total_weight(&self) -> f64 {
        self.samples.iter().map(|s| s.weight).collect::<NeumaierSum>().value()
    }

    /// `sum_i w_i y_i` with compensated summation.
    pub fn weighted_response_sum(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| s.weight * s.response)
            .collect::<NeumaierSum>()
            .value()
    }

    /// Raw input indices absorbed by the pseudo-sample at position `i`.
    pub fn provenance(&self, i: usize) -> Vec<usize> {
        match &self.provenance {
            None => vec![i],
            Some(p) => p.order[p.spans[i].clone()].to_vec(),
        }
    }

    /// Sorted-position ranges of maximal runs of equal scores.
    pub fn tie_groups(&self) -> Vec<Range<usize>> {
        let mut groups = Vec::new();
        let mut start = 0;
        for i in 1..=self.samples.len() {
            if i == self.samples.len() || self.samples[i].score != self.samples[start].score {
                groups.push(start..i);
                start = i;
            }
        }
        groups
    }

    /// Collapses each tie group into a single sample carrying the group weight.
    ///
    /// The result has strictly increasing scores and the same isotonic fit
    /// values as `self`, since tied members always share a block.
    pub fn collapse_ties(&self) -> OrderedDataset {
        let groups = self.tie_groups();
        if groups.len() == self.samples.len() {
            return self.clone();
        }
        let samples = groups
            .iter()
            .map(|g| {
                let weight: NeumaierSum = self.samples[g.clone()].iter().map(|s| s.weight).collect();
                WeightedSample::new(
                    self.samples[g.start].response,
                    weight.value(),
                    self.samples[g.start].score,
                )
            })
            .collect();
        let (order, spans) = match &self.provenance {
            None => ((0..self.len()).collect(), groups),
            Some(p) => {
                let spans = groups
                    .iter()
                    .map(|g| p.spans[g.start].start..p.spans[g.end - 1].end)
                    .collect();
                (p.order.clone(), spans)
            }
        };
        Self::from_parts(samples, order, spans)
    }
}

/// A maximal run of samples sharing one fitted value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Block {
    /// First sample position (0-based).
    pub start: usize,
    /// One past the last sample position; equals the slicing point `i_k`.
    pub end: usize,
    /// Weighted mean of the responses in `start..end`.
    pub value: f64,
    /// Total case weight of the block.
    pub weight: f64,
}

impl Block {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }

    pub fn range(&self) -> Range<usize> {
        self.start..self.end
    }
}

/// Solution of a weighted isotonic regression as a partition into blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsotonicFit {
    blocks: Vec<Block>,
    n: usize,
}

impl IsotonicFit {
    /// Validates that `blocks` tile `0..n` with strictly increasing values.
    pub fn from_blocks(blocks: Vec<Block>) -> Result<Self> {
        let Some(first) = blocks.first() else {
            return Err(Error::EmptyDataset);
        };
        if first.start != 0 {
            return Err(Error::InvalidModel("first block must start at 0".into()));
        }
        for (k, b) in blocks.iter().enumerate() {
            if b.is_empty() {
                return Err(Error::InvalidModel(format!("block {k} is empty")));
            }
            if !b.value.is_finite() || !(b.weight > 0.0) {
                return Err(Error::InvalidModel(format!(
                    "block {k} has a non-finite value or non-positive weight"
                )));
            }
            if k > 0 {
                let prev = &blocks[k - 1];
                if prev.end != b.start {
                    return Err(Error::InvalidModel(format!("blocks {} and {k} do not tile", k - 1)));
                }
                if !(prev.value < b.value) {
                    return Err(Error::InvalidModel(format!(
                        "block values not strictly increasing at block {k}"
                    )));
                }
            }
        }
        let n = blocks.last().map_or(0, |b| b.end);
        Ok(Self { blocks, n })
    }

    pub(crate) fn from_blocks_unchecked(blocks: Vec<Block>) -> Self {
        let n = blocks.last().map_or(0, |b| b.end);
        Self { blocks, n }
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// Number of fitted samples.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Complexity number `K`: the number of blocks.
    pub fn complexity(&self) -> usize {
        self.blocks.len()
    }

    /// Slicing points `i_1 < ... < i_K = n`.
    pub fn slicing_points(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.end).collect()
    }

    pub fn block_values(&self) -> Vec<f64> {
        self.blocks.iter().map(|b| b.value).collect()
    }

    /// Fitted value for every sample position.
    pub fn fitted_values(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n);
        for b in &self.blocks {
            out.extend(std::iter::repeat_n(b.value, b.len()));
        }
        out
    }

    /// Index of the block containing sample position `i`.
    pub fn block_of(&self, i: usize) -> usize {
        self.blocks.partition_point(|b| b.end <= i)
    }
}
