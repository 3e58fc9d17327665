//! Isotonic recalibration of candidate-model scores.
//!
//! A [`Recalibrator`] binds the distinct training scores (breakpoints) to an
//! isotonic fit of the responses. It predicts either with the step function,
//! which induces a partition of the covariate space into price cohorts, or
//! with midpoint interpolation between neighbouring breakpoints.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pav::{merge_blocks, merge_ties, pav_fit};
use crate::types::{IsotonicFit, OrderedDataset, WeightedSample};

/// One manual pooling of block `block` (0-based) with its right neighbour.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockMerge {
    pub block: usize,
    pub left_value: f64,
    pub right_value: f64,
    pub merged_value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Recalibrator {
    /// Tie-collapsed training data, one sample per distinct score.
    data: OrderedDataset,
    breakpoints: Vec<f64>,
    fit: IsotonicFit,
    edits: Vec<BlockMerge>,
}

/// Fits a recalibrator: merge tied scores, then PAV on the ranked responses.
pub fn recalibrate(raw: &[WeightedSample]) -> Result<Recalibrator> {
    let data = merge_ties(raw)?;
    let fit = pav_fit(&data);
    Ok(Recalibrator::from_tied_fit(&data, &fit))
}

impl Recalibrator {
    /// Re-expresses a fit over tie-merged pseudo-samples on distinct scores.
    fn from_tied_fit(data: &OrderedDataset, fit: &IsotonicFit) -> Self {
        let collapsed = data.collapse_ties();
        let breakpoints: Vec<f64> = collapsed.scores().collect();
        let groups = data.tie_groups();
        let mut blocks = fit.blocks().to_vec();
        let mut g = 0;
        for b in &mut blocks {
            let start = g;
            while g < groups.len() && groups[g].end <= b.end {
                g += 1;
            }
            debug_assert_eq!(groups[start].start, b.start, "tie group split across blocks");
            b.start = start;
            b.end = g;
        }
        Self {
            data: collapsed,
            breakpoints,
            fit: IsotonicFit::from_blocks_unchecked(blocks),
            edits: Vec::new(),
        }
    }

    /// Reassembles a model from stored parts, validating every invariant.
    pub fn from_parts(
        breakpoints: Vec<f64>,
        responses: Vec<f64>,
        weights: Vec<f64>,
        fit: IsotonicFit,
        edits: Vec<BlockMerge>,
    ) -> Result<Self> {
        let n = breakpoints.len();
        for (what, got) in [("responses", responses.len()), ("weights", weights.len()), ("fit", fit.n())] {
            if got != n {
                return Err(Error::LengthMismatch {
                    what,
                    got,
                    expected: n,
                });
            }
        }
        let samples = (0..n)
            .map(|i| WeightedSample::new(responses[i], weights[i], breakpoints[i]))
            .collect();
        let data = OrderedDataset::from_sorted(samples)?;
        let fit = IsotonicFit::from_blocks(fit.blocks().to_vec())?;
        Ok(Self {
            data,
            breakpoints,
            fit,
            edits,
        })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn fit(&self) -> &IsotonicFit {
        &self.fit
    }

    /// Training data collapsed to one sample per breakpoint.
    pub fn data(&self) -> &OrderedDataset {
        &self.data
    }

    pub fn edits(&self) -> &[BlockMerge] {
        &self.edits
    }

    pub fn complexity(&self) -> usize {
        self.fit.complexity()
    }

    /// `(min score, max score)` seen at fit time.
    pub fn score_range(&self) -> (f64, f64) {
        (self.breakpoints[0], self.breakpoints[self.breakpoints.len() - 1])
    }

    fn value_at(&self, breakpoint: usize) -> f64 {
        self.fit.blocks()[self.fit.block_of(breakpoint)].value
    }

    /// Index of the last breakpoint `<= score`, clamped to the first.
    fn floor_index(&self, score: f64) -> usize {
        self.breakpoints.partition_point(|&b| b <= score).saturating_sub(1)
    }

    /// Step-function prediction and its 0-based block.
    ///
    /// Block `k` owns the half-open score interval from its first breakpoint
    /// up to the first breakpoint of block `k + 1`. Scores below the range go
    /// to the first block, scores at or above the last slicing point to the last.
    pub fn predict_step(&self, score: f64) -> (f64, usize) {
        let k = self.fit.block_of(self.floor_index(score));
        (self.fit.blocks()[k].value, k)
    }

    /// Midpoint interpolation: between breakpoints `i` and `i + 1` (open on
    /// the left, closed on the right) return the average of their fitted
    /// values; exact hits return the fitted value; outside the range clamp.
    pub fn predict_midpoint(&self, score: f64) -> f64 {
        let last = self.breakpoints.len() - 1;
        if score <= self.breakpoints[0] {
            return self.value_at(0);
        }
        if score >= self.breakpoints[last] {
            return self.value_at(last);
        }
        let i = self.floor_index(score);
        if self.breakpoints[i] == score {
            self.value_at(i)
        } else {
            0.5 * (self.value_at(i) + self.value_at(i + 1))
        }
    }

    /// Step-function block for each score.
    pub fn assign_partition(&self, scores: &[f64]) -> PartitionLabeling {
        PartitionLabeling {
            labels: scores.iter().map(|&s| self.predict_step(s).1).collect(),
            block_values: self.fit.block_values(),
        }
    }

    /// Pools block `k` (0-based) with block `k + 1` and logs the edit.
    pub fn merge_blocks(&self, k: usize) -> Result<Recalibrator> {
        let fit = merge_blocks(&self.fit, &self.data, k)?;
        let blocks = self.fit.blocks();
        let mut edits = self.edits.clone();
        edits.push(BlockMerge {
            block: k,
            left_value: blocks[k].value,
            right_value: blocks[k + 1].value,
            merged_value: fit.blocks()[k].value,
        });
        Ok(Recalibrator {
            data: self.data.clone(),
            breakpoints: self.breakpoints.clone(),
            fit,
            edits,
        })
    }

    /// Pools the two lowest-valued blocks.
    pub fn merge_low(&self) -> Result<Recalibrator> {
        self.merge_blocks(0)
    }

    /// Pools the two highest-valued blocks.
    pub fn merge_high(&self) -> Result<Recalibrator> {
        match self.complexity() {
            0 | 1 => Err(Error::OutOfRange {
                k: 0,
                complexity: self.complexity(),
            }),
            k => self.merge_blocks(k - 2),
        }
    }
}

/// Cohort label (0-based block index) for each row, plus the cohort values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionLabeling {
    pub labels: Vec<usize>,
    pub block_values: Vec<f64>,
}

/// Weighted share of each covariate level falling into each block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalTable {
    pub levels: Vec<String>,
    /// `shares[level][block]`; each row sums to 1.
    pub shares: Vec<Vec<f64>>,
    pub level_weights: Vec<f64>,
}

/// Tabulates, per covariate level, how its weight splits across blocks.
/// Levels are listed in lexicographic order.
pub fn marginal_summary<S: AsRef<str>>(
    labeling: &PartitionLabeling,
    covariate: &[S],
    weights: &[f64],
) -> Result<MarginalTable> {
    let n = labeling.labels.len();
    for (what, got) in [("covariate", covariate.len()), ("weights", weights.len())] {
        if got != n {
            return Err(Error::LengthMismatch {
                what,
                got,
                expected: n,
            });
        }
    }
    let k = labeling.block_values.len();
    let mut per_level: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for i in 0..n {
        let row = per_level
            .entry(covariate[i].as_ref())
            .or_insert_with(|| vec![0.0; k]);
        row[labeling.labels[i]] += weights[i];
    }
    let mut table = MarginalTable {
        levels: Vec::with_capacity(per_level.len()),
        shares: Vec::with_capacity(per_level.len()),
        level_weights: Vec::with_capacity(per_level.len()),
    };
    for (level, row) in per_level {
        let total: f64 = row.iter().sum();
        table.levels.push(level.to_string());
        table.shares.push(row.iter().map(|w| w / total).collect());
        table.level_weights.push(total);
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(pairs: &[(f64, f64)]) -> Recalibrator {
        let raw: Vec<_> = pairs.iter().map(|&(s, y)| WeightedSample::unit(y, s)).collect();
        recalibrate(&raw).unwrap()
    }

    #[test]
    fn pooled_model_is_constant() {
        let m = model(&[(1.0, 3.0), (2.0, 1.0), (3.0, 2.0)]);
        assert_eq!(m.complexity(), 1);
        assert_eq!(m.fit().block_values(), vec![2.0]);
        assert_eq!(m.score_range(), (1.0, 3.0));
    }

    #[test]
    fn single_sample_model() {
        let m = model(&[(0.3, 9.5)]);
        assert_eq!(m.complexity(), 1);
        assert_eq!(m.predict_step(-100.0), (9.5, 0));
        assert_eq!(m.predict_midpoint(100.0), 9.5);
    }

    #[test]
    fn monotone_model_is_identity() {
        let m = model(&[(1.0, 1.0), (2.0, 4.0), (3.0, 9.0)]);
        assert_eq!(m.breakpoints(), &[1.0, 2.0, 3.0]);
        assert_eq!(m.fit().block_values(), vec![1.0, 4.0, 9.0]);
        assert_eq!(m.complexity(), 3);
    }

    #[test]
    fn ties_collapse_to_breakpoints() {
        let m = model(&[(1.0, 1.0), (2.0, 3.0), (2.0, 5.0), (3.0, 2.0)]);
        assert_eq!(m.breakpoints(), &[1.0, 2.0, 3.0]);
        assert_eq!(m.fit().n(), 3);
        // scores 2,2,3 pool: (3 + 5 + 2) / 3
        let v = m.fit().block_values();
        assert_eq!(v.len(), 2);
        assert!((v[1] - 10.0 / 3.0).abs() < 1e-14);
        assert_eq!(m.data().samples()[1].weight, 2.0);
        let mut p = m.data().provenance(1);
        p.sort();
        assert_eq!(p, vec![1, 2]);
    }

    #[test]
    fn midpoint_rules() {
        let m = model(&[(1.0, 1.0), (2.0, 3.0)]);
        assert_eq!(m.predict_midpoint(1.0), 1.0);
        assert_eq!(m.predict_midpoint(2.0), 3.0);
        assert_eq!(m.predict_midpoint(1.5), 2.0);
        assert_eq!(m.predict_midpoint(0.0), 1.0);
        assert_eq!(m.predict_midpoint(7.0), 3.0);
    }

    #[test]
    fn step_rules() {
        let m = model(&[(1.0, 1.0), (2.0, 3.0), (3.0, 2.0), (4.0, 5.0)]);
        // blocks: {1} = 1, {2,3} = 2.5, {4} = 5
        assert_eq!(m.predict_step(1.0), (1.0, 0));
        assert_eq!(m.predict_step(1.99), (1.0, 0));
        assert_eq!(m.predict_step(2.0), (2.5, 1));
        assert_eq!(m.predict_step(3.5), (2.5, 1));
        assert_eq!(m.predict_step(4.0), (5.0, 2));
        assert_eq!(m.predict_step(40.0), (5.0, 2));
        assert_eq!(m.predict_step(-1.0), (1.0, 0));
    }

    #[test]
    fn partition_labels() {
        let m = model(&[(1.0, 1.0), (2.0, 3.0)]);
        let lab = m.assign_partition(&[1.0, 2.0]);
        assert_eq!(lab.labels, vec![0, 1]);
        assert_eq!(m.assign_partition(&[-5.0, -1.0]).labels, vec![0, 0]);
        assert_eq!(m.assign_partition(&[1.2, 1.9, 2.0, 2.1]).labels, vec![0, 0, 1, 1]);
    }

    #[test]
    fn marginal_shares() {
        let lab = PartitionLabeling {
            labels: vec![0, 1, 0, 1],
            block_values: vec![1.0, 2.0],
        };
        let t = marginal_summary(&lab, &["A", "A", "B", "C"], &[1.0, 3.0, 2.0, 2.0]).unwrap();
        assert_eq!(t.levels, vec!["A", "B", "C"]);
        assert_eq!(t.shares[0], vec![0.25, 0.75]);
        assert_eq!(t.shares[1], vec![1.0, 0.0]);
        assert_eq!(t.shares[2], vec![0.0, 1.0]);
        let one = PartitionLabeling {
            labels: vec![0],
            block_values: vec![1.0],
        };
        assert_eq!(marginal_summary(&one, &["x"], &[2.0]).unwrap().shares, vec![vec![1.0]]);
        assert!(matches!(
            marginal_summary(&lab, &["A"], &[1.0; 4]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn boundary_edits_are_logged() {
        let m = model(&[(1.0, 1.0), (2.0, 2.0), (3.0, 9.0)]);
        let high = m.merge_high().unwrap();
        assert_eq!(high.fit().block_values(), vec![1.0, 5.5]);
        assert_eq!(high.edits().len(), 1);
        assert_eq!(high.edits()[0].merged_value, 5.5);
        let low = high.merge_low().unwrap();
        assert_eq!(low.complexity(), 1);
        assert_eq!(low.edits().len(), 2);
        assert!(matches!(low.merge_low(), Err(Error::OutOfRange { .. })));
        assert!(matches!(low.merge_high(), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn from_parts_roundtrip() {
        let m = model(&[(1.0, 1.0), (2.0, 3.0), (3.0, 2.0)]);
        let r = Recalibrator::from_parts(
            m.breakpoints().to_vec(),
            m.data().responses().collect(),
            m.data().weights().collect(),
            m.fit().clone(),
            m.edits().to_vec(),
        )
        .unwrap();
        assert_eq!(r.fit(), m.fit());
        assert!(matches!(
            Recalibrator::from_parts(vec![3.0, 2.0, 1.0], vec![1.0; 3], vec![1.0; 3], m.fit().clone(), vec![]),
            Err(Error::InvalidSample { index: 1, .. })
        ));
        assert!(matches!(
            Recalibrator::from_parts(vec![1.0, 2.0], vec![1.0; 2], vec![1.0; 2], m.fit().clone(), vec![]),
            Err(Error::LengthMismatch { what: "fit", .. })
        ));
    }
}
