//! Isotonic recalibration of regression scores.
//!
//! Given responses, case weights and the scores of any candidate model, the
//! weighted isotonic regression of the responses on the score ranking gives
//! an in-sample auto-calibrated step function. Its blocks are price cohorts
//! and their count `K` measures how much signal the scores carry.
//!
//! - [`pav`]: tie merging, the PAV solver and block edits.
//! - [`oracle`]: min-max and brute-force reference solvers.
//! - [`kkt`]: optimality certificate from the Lagrange multipliers.
//! - [`recalibrate`]: the deployable [`Recalibrator`] and covariate partitions.
//! - [`diagnostics`]: calibration gaps, balance, losses and CORP reliability points.
//! - [`simulate`]: coupled-noise Monte Carlo of `K` against the noise scale.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod kkt;
pub mod loss;
pub mod oracle;
pub mod pav;
pub mod recalibrate;
pub mod simulate;
pub mod sum;
pub mod types;

pub use error::{Error, Result};
pub use loss::LossKind;
pub use pav::{merge_blocks, merge_ties, pav_fit, pav_fit_ranked, TieMergePolicy};
pub use recalibrate::{recalibrate, BlockMerge, MarginalTable, PartitionLabeling, Recalibrator};
pub use simulate::{ComplexityCurve, NoiseFamily, SimulationConfig};
pub use types::{Block, IsotonicFit, OrderedDataset, WeightedSample};
