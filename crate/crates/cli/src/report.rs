//! Recalibration reports as JSON and as aligned text.

use std::fmt::Write as _;

use isorecal_core::diagnostics::{check_autocalibration, balance_gap, relative_balance_gap, LossReport};
use isorecal_core::{LossKind, Recalibrator};
use serde::{Deserialize, Serialize};

use crate::error::CliResult;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockRow {
    /// 1-based block index.
    pub block: usize,
    pub score_from: f64,
    pub score_to: f64,
    pub value: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRow {
    pub block: usize,
    pub value: f64,
    pub empirical_mean: f64,
    pub gap: f64,
    pub relative_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub complexity: usize,
    pub breakpoints: usize,
    pub rows: Option<usize>,
    pub edits: usize,
    pub blocks: Vec<BlockRow>,
    pub calibration_gaps: Vec<GapRow>,
    pub max_relative_calibration_gap: f64,
    pub balance_gap: f64,
    pub relative_balance_gap: f64,
    pub losses: Option<LossReport>,
}

impl ModelReport {
    pub fn new(model: &Recalibrator, rows: Option<usize>, losses: Option<LossReport>) -> CliResult<Self> {
        let fit = model.fit();
        let data = model.data();
        let bp = model.breakpoints();
        let blocks = fit
            .blocks()
            .iter()
            .enumerate()
            .map(|(k, b)| BlockRow {
                block: k + 1,
                score_from: bp[b.start],
                score_to: bp[b.end - 1],
                value: b.value,
                weight: b.weight,
            })
            .collect();
        let gaps: Vec<GapRow> = check_autocalibration(fit, data)?
            .into_iter()
            .map(|g| GapRow {
                block: g.block + 1,
                value: g.value,
                empirical_mean: g.empirical_mean,
                gap: g.gap,
                relative_gap: g.relative_gap,
            })
            .collect();
        Ok(ModelReport {
            complexity: fit.complexity(),
            breakpoints: bp.len(),
            rows,
            edits: model.edits().len(),
            blocks,
            max_relative_calibration_gap: gaps.iter().map(|g| g.relative_gap).fold(0.0, f64::max),
            calibration_gaps: gaps,
            balance_gap: balance_gap(fit, data)?,
            relative_balance_gap: relative_balance_gap(fit, data)?,
            losses,
        })
    }

    pub fn to_json(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("report serialises");
        out.push(b'\n');
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = write!(out, "complexity K = {} ({} distinct scores", self.complexity, self.breakpoints);
        if let Some(rows) = self.rows {
            let _ = write!(out, ", {rows} rows");
        }
        if self.edits > 0 {
            let _ = write!(out, ", {} manual merges", self.edits);
        }
        out.push_str(")\n\n");
        let rows: Vec<Vec<String>> = self
            .blocks
            .iter()
            .zip(&self.calibration_gaps)
            .map(|(b, g)| {
                vec![
                    b.block.to_string(),
                    fmt(b.score_from),
                    fmt(b.score_to),
                    fmt(b.value),
                    fmt(b.weight),
                    format!("{:.1e}", g.gap),
                ]
            })
            .collect();
        out.push_str(&columns(&["block", "score_from", "score_to", "value", "weight", "calib_gap"], &rows));
        let _ = writeln!(
            out,
            "\nbalance gap: {:.3e} (relative {:.3e})",
            self.balance_gap, self.relative_balance_gap
        );
        if let Some(losses) = &self.losses {
            out.push('\n');
            out.push_str(&loss_table(losses));
        }
        out
    }
}

/// Loss columns in the layout: loss, scores as predictions, recalibrated.
pub fn loss_table(report: &LossReport) -> String {
    let mut rows: Vec<Vec<String>> = report
        .comparisons
        .iter()
        .map(|c| vec![c.kind.to_string(), fmt(c.before), fmt(c.after)])
        .collect();
    rows.push(vec!["rmse".into(), fmt(report.rmse_before), fmt(report.rmse_after)]);
    rows.push(vec![
        "average".into(),
        fmt(report.average_before),
        fmt(report.average_after),
    ]);
    let mut out = columns(&["in-sample", "before", "after"], &rows);
    let _ = writeln!(out, "observed average: {}", fmt(report.average_response));
    if report.get(LossKind::GammaDeviance).is_none() {
        out.push_str("(gamma deviance and qlike skipped: non-positive values present)\n");
    }
    out
}

fn fmt(x: f64) -> String {
    format!("{x:.6}")
}

/// Left-aligned text columns separated by two spaces.
pub fn columns(headers: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = headers.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    let mut line = |cells: &mut dyn Iterator<Item = &str>| {
        let joined: Vec<String> = cells
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        out.push_str(joined.join("  ").trim_end());
        out.push('\n');
    };
    line(&mut headers.iter().copied());
    for row in rows {
        line(&mut row.iter().map(String::as_str));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn columns_align() {
        let t = columns(&["a", "bbb"], &[vec!["long".into(), "1".into()]]);
        assert_eq!(t, "a     bbb\nlong  1\n");
    }
}
