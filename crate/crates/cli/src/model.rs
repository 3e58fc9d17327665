//! Versioned JSON persistence for a [`Recalibrator`].
//!
//! Block and edit indices in the file are 1-based; slicing points are the
//! cumulative breakpoint counts `i_1 < ... < i_K = n`. The per-breakpoint
//! response means and weights are kept so that edits and calibration reports
//! can be recomputed from the model alone.

use std::path::Path;

use isorecal_core::{Block, BlockMerge, IsotonicFit, Recalibrator};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};
use crate::table::write_file;

pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub version: u32,
    pub breakpoints: Vec<f64>,
    pub breakpoint_responses: Vec<f64>,
    pub breakpoint_weights: Vec<f64>,
    pub slicing_points: Vec<usize>,
    pub block_values: Vec<f64>,
    pub block_weights: Vec<f64>,
    pub complexity: usize,
    pub score_range: [f64; 2],
    pub edits: Vec<EditRecord>,
    pub metadata: Metadata,
}

/// A manual merge of blocks `block` and `block + 1` (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EditRecord {
    pub kind: EditKind,
    pub block: usize,
    pub left_value: f64,
    pub right_value: f64,
    pub merged_value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EditKind {
    MergeBlocks,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub created_at: String,
    /// SHA-256 of the training CSV bytes.
    pub input_digest: String,
    pub tool_version: String,
}

impl Metadata {
    pub fn new(input_bytes: &[u8]) -> Self {
        Self {
            created_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            input_digest: hex::encode(Sha256::digest(input_bytes)),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

impl ModelFile {
    pub fn from_model(model: &Recalibrator, metadata: Metadata) -> Self {
        let fit = model.fit();
        let (lo, hi) = model.score_range();
        ModelFile {
            version: MODEL_VERSION,
            breakpoints: model.breakpoints().to_vec(),
            breakpoint_responses: model.data().responses().collect(),
            breakpoint_weights: model.data().weights().collect(),
            slicing_points: fit.slicing_points(),
            block_values: fit.block_values(),
            block_weights: fit.blocks().iter().map(|b| b.weight).collect(),
            complexity: fit.complexity(),
            score_range: [lo, hi],
            edits: model
                .edits()
                .iter()
                .map(|e| EditRecord {
                    kind: EditKind::MergeBlocks,
                    block: e.block + 1,
                    left_value: e.left_value,
                    right_value: e.right_value,
                    merged_value: e.merged_value,
                })
                .collect(),
            metadata,
        }
    }

    pub fn to_model(&self) -> CliResult<Recalibrator> {
        let bad = |msg: String| CliError::input(format!("invalid model file: {msg}"));
        if self.version != MODEL_VERSION {
            return Err(bad(format!("unsupported version {}", self.version)));
        }
        let k = self.block_values.len();
        if self.complexity != k || self.slicing_points.len() != k || self.block_weights.len() != k {
            return Err(bad(format!(
                "complexity {} disagrees with {} slicing points, {} values and {} weights",
                self.complexity,
                self.slicing_points.len(),
                k,
                self.block_weights.len()
            )));
        }
        let mut blocks = Vec::with_capacity(k);
        let mut start = 0;
        for i in 0..k {
            let end = self.slicing_points[i];
            if end <= start {
                return Err(bad("slicing points must be strictly increasing and positive".into()));
            }
            blocks.push(Block {
                start,
                end,
                value: self.block_values[i],
                weight: self.block_weights[i],
            });
            start = end;
        }
        let fit = IsotonicFit::from_blocks(blocks).map_err(|e| bad(e.to_string()))?;
        let edits = self
            .edits
            .iter()
            .map(|e| {
                if e.block == 0 {
                    return Err(bad("edit block indices are 1-based".into()));
                }
                Ok(BlockMerge {
                    block: e.block - 1,
                    left_value: e.left_value,
                    right_value: e.right_value,
                    merged_value: e.merged_value,
                })
            })
            .collect::<CliResult<Vec<_>>>()?;
        let model = Recalibrator::from_parts(
            self.breakpoints.clone(),
            self.breakpoint_responses.clone(),
            self.breakpoint_weights.clone(),
            fit,
            edits,
        )
        .map_err(|e| bad(e.to_string()))?;
        let (lo, hi) = model.score_range();
        if [lo, hi] != self.score_range {
            return Err(bad("score_range does not match the breakpoints".into()));
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> CliResult<()> {
        let mut json = serde_json::to_vec_pretty(self).expect("model serialises");
        json.push(b'\n');
        write_file(path, &json)
    }

    /// Any failure to read or parse the model is reported as malformed input.
    pub fn load(path: &Path) -> CliResult<ModelFile> {
        let bytes = std::fs::read(path)
            .map_err(|e| CliError::input(format!("cannot read model {}: {e}", path.display())))?;
        serde_json::from_slice(&bytes)
            .map_err(|e| CliError::input(format!("cannot parse model {}: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use isorecal_core::{recalibrate, WeightedSample};

    fn sample_model() -> Recalibrator {
        let raw: Vec<_> = [(0.5, 1.0), (1.0, 3.0), (1.0, 1.0), (2.0, 2.5), (3.0, 9.0)]
            .iter()
            .map(|&(s, y)| WeightedSample::unit(y, s))
            .collect();
        recalibrate(&raw).unwrap().merge_high().unwrap()
    }

    #[test]
    fn json_roundtrip_preserves_model() {
        let model = sample_model();
        let file = ModelFile::from_model(&model, Metadata::new(b"data"));
        let json = serde_json::to_string(&file).unwrap();
        let back: ModelFile = serde_json::from_str(&json).unwrap();
        assert_eq!(back, file);
        let restored = back.to_model().unwrap();
        assert_eq!(restored.fit(), model.fit());
        assert_eq!(restored.edits(), model.edits());
        assert_eq!(file.edits[0].block, model.complexity());
    }

    #[test]
    fn rejects_inconsistent_files() {
        let file = ModelFile::from_model(&sample_model(), Metadata::new(b""));
        let mut f = file.clone();
        f.version = 2;
        assert!(f.to_model().is_err());
        let mut f = file.clone();
        f.complexity += 1;
        assert!(f.to_model().is_err());
        let mut f = file.clone();
        f.block_values.reverse();
        assert!(f.to_model().is_err());
        let mut f = file.clone();
        f.score_range[1] += 1.0;
        assert!(f.to_model().is_err());
        let mut f = file;
        f.slicing_points[0] = 0;
        assert_eq!(f.to_model().unwrap_err().exit_code(), 2);
    }

    #[test]
    fn digest_is_sha256_hex() {
        let m = Metadata::new(b"abc");
        assert_eq!(
            m.input_digest,
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
