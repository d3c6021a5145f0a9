//! Scoring of predicted masks and quality estimates against ground truth,
//! batch evaluation of dataset manifests and report export.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{localize, SweepConfig};
use crate::codec::Quality;
use crate::error::{Error, Result};
use crate::forge::{DatasetEntry, DatasetManifest, ForgeryKind, ForgerySpec};
use crate::io;
use crate::metrics::{Confidence, QualityEstimate};
use crate::raster::{GroundTruthMask, Mask, TamperMask};

/// Truths no larger than this on either side are also scored dilated.
pub const TINY_GHOST_EDGE: usize = 20;
/// Dilation radius applied to tiny truths: half a JPEG block.
pub const TINY_GHOST_DILATION: usize = 4;
pub const CSV_HEADER: &str = "path,kind,q_cover,q_ghost,q_est,iou,precision,recall,f1,ms";

/// Set-overlap statistics of a predicted mask against the truth. Ratios
/// with an empty denominator are zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaskScore {
    pub iou: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub true_pixels: usize,
    pub pred_pixels: usize,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn score_mask(pred: &TamperMask, truth: &GroundTruthMask) -> Result<MaskScore> {
    if pred.width() != truth.width() || pred.height() != truth.height() {
        return Err(Error::DimensionMismatch {
            left_width: pred.width(),
            left_height: pred.height(),
            right_width: truth.width(),
            right_height: truth.height(),
        });
    }
    let (mut inter, mut pred_n, mut true_n) = (0, 0, 0);
    for (&p, &t) in pred.bits().iter().zip(truth.bits()) {
        inter += usize::from(p && t);
        pred_n += usize::from(p);
        true_n += usize::from(t);
    }
    let precision = ratio(inter, pred_n);
    let recall = ratio(inter, true_n);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(MaskScore {
        iou: ratio(inter, pred_n + true_n - inter),
        precision,
        recall,
        f1,
        true_pixels: true_n,
        pred_pixels: pred_n,
    })
}

/// Scores against the truth dilated by [`TINY_GHOST_DILATION`].
pub fn score_mask_dilated(pred: &TamperMask, truth: &GroundTruthMask) -> Result<MaskScore> {
    score_mask(pred, &truth.dilated(TINY_GHOST_DILATION))
}

/// Whether the truth fits in a [`TINY_GHOST_EDGE`] square.
pub fn is_tiny(truth: &Mask) -> bool {
    let (w, h) = (truth.width(), truth.height());
    let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0, 0);
    let mut any = false;
    for y in 0..h {
        for x in 0..w {
            if truth.get(x, y) {
                any = true;
                x0 = x0.min(x);
                y0 = y0.min(y);
                x1 = x1.max(x);
                y1 = y1.max(y);
            }
        }
    }
    any && x1 - x0 < TINY_GHOST_EDGE && y1 - y0 < TINY_GHOST_EDGE
}

/// Attack family used for the per-scenario breakdown.
pub fn scenario(spec: &ForgerySpec) -> &'static str {
    match (spec.kind, spec.ghost_q) {
        (ForgeryKind::GhostInsert, Some(g)) if g > spec.cover_q => "ghost_higher",
        (ForgeryKind::GhostInsert, Some(g)) if g < spec.cover_q => "ghost_lower",
        (ForgeryKind::GhostInsert, _) => "same_quality",
        (kind, _) => kind.as_str(),
    }
}

/// Ghost insertion whose ghost quality equals the cover quality.
pub fn is_same_quality(spec: &ForgerySpec) -> bool {
    spec.kind == ForgeryKind::GhostInsert && spec.ghost_q.is_none_or(|g| g == spec.cover_q)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub path: String,
    pub kind: ForgeryKind,
    pub scenario: String,
    pub spec: ForgerySpec,
    pub q_cover: Quality,
    pub q_ghost: Option<Quality>,
    pub estimate: Option<QualityEstimate>,
    /// `estimate.q_final`, the grid quality scored against `q_cover`.
    pub q_est: Option<Quality>,
    /// Refined quality whose map was binarized.
    pub q_analyzed: Option<Quality>,
    /// Detection confidence, forced low on same-quality rows.
    pub confidence: Confidence,
    pub score: MaskScore,
    /// Score against the dilated truth, for tiny truths only.
    pub dilated: Option<MaskScore>,
    pub ms: u64,
    pub error: Option<String>,
}

impl EvalRow {
    pub fn quality_hit(&self, tolerance: u32) -> bool {
        self.q_est
            .is_some_and(|q| q.get().abs_diff(self.q_cover.get()) <= tolerance)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub count: usize,
    pub failures: usize,
    pub mean_iou: f64,
    pub median_iou: f64,
    /// Fraction of rows with `|q_est - q_cover| <= tolerance`.
    pub quality_accuracy: f64,
    pub high_confidence: usize,
}

impl Aggregate {
    /// Failed rows count with zero IoU and as quality misses.
    pub fn of<'a>(rows: impl IntoIterator<Item = &'a EvalRow>, tolerance: u32) -> Self {
        let rows: Vec<&EvalRow> = rows.into_iter().collect();
        let count = rows.len();
        let mut ious: Vec<f64> = rows.iter().map(|r| r.score.iou).collect();
        ious.sort_by(f64::total_cmp);
        let median_iou = match count {
            0 => 0.0,
            n if n % 2 == 1 => ious[n / 2],
            n => (ious[n / 2 - 1] + ious[n / 2]) / 2.0,
        };
        Self {
            count,
            failures: rows.iter().filter(|r| r.error.is_some()).count(),
            mean_iou: ratio_f(ious.iter().sum(), count),
            median_iou,
            quality_accuracy: ratio(rows.iter().filter(|r| r.quality_hit(tolerance)).count(), count),
            high_confidence: rows.iter().filter(|r| r.confidence == Confidence::High).count(),
        }
    }
}

fn ratio_f(num: f64, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num / den as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema: u32,
    pub sweep: SweepConfig,
    /// Quality tolerance in quality units (steps times sweep step).
    pub tolerance: u32,
    pub rows: Vec<EvalRow>,
    pub overall: Aggregate,
    pub scenarios: BTreeMap<String, Aggregate>,
}

impl EvalReport {
    /// Builds aggregates from rows sorted by path.
    pub fn from_rows(mut rows: Vec<EvalRow>, sweep: SweepConfig, tolerance: u32) -> Self {
        rows.sort_by(|a, b| a.path.cmp(&b.path));
        let mut groups: BTreeMap<String, Vec<&EvalRow>> = BTreeMap::new();
        for row in &rows {
            groups.entry(row.scenario.clone()).or_default().push(row);
        }
        let scenarios = groups
            .into_iter()
            .map(|(k, v)| (k, Aggregate::of(v, tolerance)))
            .collect();
        Self {
            schema: 1,
            sweep,
            tolerance,
            overall: Aggregate::of(&rows, tolerance),
            scenarios,
            rows,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer
            .write_record(CSV_HEADER.split(','))
            .expect("in-memory write");
        let opt = |q: Option<Quality>| q.map(|q| q.get().to_string()).unwrap_or_default();
        for r in &self.rows {
            writer
                .write_record([
                    r.path.clone(),
                    r.kind.to_string(),
                    r.q_cover.get().to_string(),
                    opt(r.q_ghost),
                    opt(r.q_est),
                    r.score.iou.to_string(),
                    r.score.precision.to_string(),
                    r.score.recall.to_string(),
                    r.score.f1.to_string(),
                    r.ms.to_string(),
                ])
                .expect("in-memory write");
        }
        String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }
}

fn evaluate_entry(entry: &DatasetEntry, root: &Path, sweep: &SweepConfig) -> EvalRow {
    let start = Instant::now();
    let spec = &entry.spec;
    let mut row = EvalRow {
        path: entry.path.clone(),
        kind: spec.kind,
        scenario: scenario(spec).to_string(),
        spec: spec.clone(),
        q_cover: spec.cover_q,
        q_ghost: spec.ghost_q,
        estimate: None,
        q_est: None,
        q_analyzed: None,
        confidence: Confidence::Low,
        score: MaskScore {
            iou: 0.0,
            precision: 0.0,
            recall: 0.0,
            f1: 0.0,
            true_pixels: 0,
            pred_pixels: 0,
        },
        dilated: None,
        ms: 0,
        error: None,
    };
    let outcome = (|| -> Result<()> {
        let image = io::load_image(&root.join(&entry.path))?;
        let mask_path = root.join(&entry.mask_path);
        let truth = Mask::from_png(&std::fs::read(&mask_path).map_err(|e| Error::io(&mask_path, e))?)?;
        let result = localize::<f64>(&image, sweep)?;
        row.estimate = result.estimate;
        row.q_est = result.estimate.map(|e| e.q_final);
        row.q_analyzed = Some(result.quality);
        row.score = score_mask(&result.mask, &truth)?;
        if is_tiny(&truth) {
            row.dilated = Some(score_mask_dilated(&result.mask, &truth)?);
        }
        if !is_same_quality(spec) {
            row.confidence = result.detection;
        }
        Ok(())
    })();
    if let Err(e) = outcome {
        row.error = Some(e.chain());
    }
    row.ms = start.elapsed().as_millis() as u64;
    row
}

/// Localizes every manifest entry (paths relative to `root`) and scores it.
/// Per-entry failures are recorded on their rows. `tolerance_steps` is in
/// sweep steps.
pub fn evaluate(manifest: &DatasetManifest, root: &Path, sweep: &SweepConfig, tolerance_steps: u32) -> EvalReport {
    let rows = manifest
        .entries
        .par_iter()
        .map(|e| evaluate_entry(e, root, sweep))
        .collect();
    EvalReport::from_rows(rows, *sweep, tolerance_steps * sweep.step())
}

/// Writes the JSON report to `path` and the CSV rows next to it; returns
/// the CSV path.
pub fn export_report(report: &EvalReport, path: &Path) -> Result<PathBuf> {
    let json = serde_json::to_string_pretty(report).expect("report serializes");
    io::write_file(path, json.as_bytes())?;
    let csv_path = path.with_extension("csv");
    io::write_file(&csv_path, report.to_csv().as_bytes())?;
    Ok(csv_path)
}

pub fn load_report(path: &Path) -> Result<EvalReport> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::format(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::Rect;

    #[test]
    fn half_rectangle_example() {
        let truth = Mask::from_rect(128, 128, Rect::new(32, 32, 64, 64));
        let pred = Mask::from_rect(128, 128, Rect::new(32, 32, 32, 64));
        let s = score_mask(&pred, &truth).unwrap();
        assert_eq!((s.recall, s.precision, s.iou), (0.5, 1.0, 0.5));
        assert!((s.f1 - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn tiny_detection() {
        assert!(is_tiny(&Mask::from_rect(64, 64, Rect::new(3, 3, 20, 20))));
        assert!(!is_tiny(&Mask::from_rect(64, 64, Rect::new(3, 3, 21, 20))));
        assert!(!is_tiny(&Mask::new(8, 8)));
    }

    #[test]
    fn empty_report_is_zeroed() {
        let r = EvalReport::from_rows(Vec::new(), SweepConfig::default(), 2);
        assert_eq!(r.overall.count, 0);
        assert_eq!(r.overall.mean_iou, 0.0);
        assert_eq!(r.overall.quality_accuracy, 0.0);
        assert_eq!(r.to_csv().trim(), CSV_HEADER);
    }
}
