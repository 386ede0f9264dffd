//! Pseudo-label quality metrics.
//!
//! Box quality uses strict matching: box `i` answers annotation
//! `instance_index[i]`, so IoU is computed per pair with no Hungarian
//! assignment or score ranking. Detector mAP is deliberately absent: there is
//! no trained detector in this toolkit, and the report header says so.
//!
//! Assignment quality compares a predicted label map against an oracle map.
//! Ignore cells are a training-time abstention, not a prediction, so the
//! primary metrics (pixel accuracy, per-class IoU) exclude them from both
//! numerator and denominator. The coverage IoU additionally counts every
//! predicted-ignore cell against the union, so abstention costs score; that
//! is the metric that moves when an assignment strategy resolves more of the
//! image correctly rather than leaving it ignored.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extraction::PseudoLabelSet;
use crate::geometry::{rotated_iou, RotatedBox};
use crate::maps::{AssignmentMap, CellLabel};

/// Quality report for one pseudo-label set (plus optional assignment-map
/// metrics when an oracle map is available).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    /// Scope note, also printed as the table header.
    pub note: String,
    pub instances: usize,
    pub degenerate_fallbacks: usize,
    /// Unweighted mean of per-instance IoUs.
    pub miou: f64,
    pub per_class_miou: BTreeMap<u32, f64>,
    pub recall_at_50: f64,
    pub recall_at_75: f64,
    pub assignment: Option<AssignmentQuality>,
}

pub const REPORT_NOTE: &str =
    "pseudo-label quality only; detector mAP is out of scope (no detector is trained here)";

/// Confusion-based metrics for an assignment map against an oracle map.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AssignmentQuality {
    /// Fraction of non-ignore predicted cells whose label matches the oracle.
    pub pixel_accuracy: f64,
    /// Per-class IoU over non-ignore predicted cells.
    pub per_class_iou: BTreeMap<u32, f64>,
    pub mean_class_iou: f64,
    /// Per-class IoU where predicted-ignore cells count against the union.
    pub per_class_coverage_iou: BTreeMap<u32, f64>,
    /// Mean coverage IoU over classes present in the oracle.
    pub mean_foreground_coverage_iou: f64,
    pub scored_cells: usize,
    /// Set when the prediction is entirely ignore; all metrics are 0 then.
    pub no_scored_cells: bool,
}

/// Strict-match evaluation: IoU per (box, its own annotation) pair.
pub fn strict_match_miou(pred: &PseudoLabelSet, gt_boxes: &[RotatedBox]) -> Result<EvalReport> {
    let mut ious = Vec::with_capacity(pred.len());
    for (i, b) in pred.boxes.iter().enumerate() {
        let j = pred.instance_index[i];
        let gt = gt_boxes.get(j).ok_or_else(|| {
            Error::Format(format!(
                "instance index {j} out of range for {} ground-truth boxes",
                gt_boxes.len()
            ))
        })?;
        ious.push(rotated_iou(b, gt));
    }

    let mut per_class: BTreeMap<u32, (f64, usize)> = BTreeMap::new();
    for (i, &iou) in ious.iter().enumerate() {
        let entry = per_class.entry(pred.classes[i]).or_insert((0.0, 0));
        entry.0 += iou;
        entry.1 += 1;
    }
    let per_class_miou = per_class
        .into_iter()
        .map(|(c, (sum, n))| (c, sum / n as f64))
        .collect();

    let n = ious.len();
    let recall = |thr: f64| {
        if n == 0 {
            0.0
        } else {
            ious.iter().filter(|&&v| v >= thr).count() as f64 / n as f64
        }
    };
    Ok(EvalReport {
        note: REPORT_NOTE.to_string(),
        instances: n,
        degenerate_fallbacks: pred.degenerate_count(),
        miou: if n == 0 {
            0.0
        } else {
            ious.iter().sum::<f64>() / n as f64
        },
        per_class_miou,
        recall_at_50: recall(0.5),
        recall_at_75: recall(0.75),
        assignment: None,
    })
}

/// Compare a predicted assignment map against an oracle map.
pub fn assignment_quality(
    pred: &AssignmentMap,
    oracle: &AssignmentMap,
) -> Result<AssignmentQuality> {
    if pred.width() != oracle.width() || pred.height() != oracle.height() {
        return Err(Error::DimensionMismatch {
            expected: format!("{}x{}", oracle.width(), oracle.height()),
            got: format!("{}x{}", pred.width(), pred.height()),
        });
    }

    let mut classes: std::collections::BTreeSet<u32> = Default::default();
    for label in pred.data().iter().chain(oracle.data()) {
        if let CellLabel::Class(c) = label {
            classes.insert(*c);
        }
    }

    let mut scored = 0usize;
    let mut correct = 0usize;
    let mut ignored_cells = 0usize;
    // per class: tp, fp, fn (ignore-excluded), oracle support, ignored-on-oracle
    let mut tp: BTreeMap<u32, usize> = BTreeMap::new();
    let mut fp: BTreeMap<u32, usize> = BTreeMap::new();
    let mut fneg: BTreeMap<u32, usize> = BTreeMap::new();
    let mut oracle_support: BTreeMap<u32, usize> = BTreeMap::new();
    let mut ignored_on_oracle: BTreeMap<u32, usize> = BTreeMap::new();

    for (p, o) in pred.data().iter().zip(oracle.data()) {
        let p_ignored = *p == CellLabel::Ignore;
        if p_ignored {
            ignored_cells += 1;
        } else {
            scored += 1;
            if p == o {
                correct += 1;
            }
        }
        if let CellLabel::Class(oc) = o {
            *oracle_support.entry(*oc).or_default() += 1;
            if p_ignored {
                *ignored_on_oracle.entry(*oc).or_default() += 1;
            } else if p != o {
                *fneg.entry(*oc).or_default() += 1;
            }
        }
        if let CellLabel::Class(pc) = p {
            if p == o {
                *tp.entry(*pc).or_default() += 1;
            } else {
                *fp.entry(*pc).or_default() += 1;
            }
        }
    }

    let no_scored_cells = scored == 0;
    let mut per_class_iou = BTreeMap::new();
    let mut per_class_coverage_iou = BTreeMap::new();
    for &c in &classes {
        let t = *tp.get(&c).unwrap_or(&0);
        let f_pos = *fp.get(&c).unwrap_or(&0);
        let f_neg = *fneg.get(&c).unwrap_or(&0);
        let denom = t + f_pos + f_neg;
        per_class_iou.insert(
            c,
            if denom == 0 {
                0.0
            } else {
                t as f64 / denom as f64
            },
        );
        // |pred_c ∪ oracle_c ∪ pred_ignore|: fp covers pred_c outside the
        // oracle, oracle support covers the rest of the pair union, and the
        // ignored cells are added once (those already inside oracle_c are
        // subtracted so they are not double counted)
        let union = f_pos + oracle_support.get(&c).unwrap_or(&0) + ignored_cells
            - ignored_on_oracle.get(&c).unwrap_or(&0);
        per_class_coverage_iou.insert(
            c,
            if union == 0 {
                0.0
            } else {
                t as f64 / union as f64
            },
        );
    }

    let oracle_classes: Vec<u32> = classes
        .iter()
        .copied()
        .filter(|&c| oracle.data().contains(&CellLabel::Class(c)))
        .collect();
    let mean = |m: &BTreeMap<u32, f64>, keys: &[u32]| {
        if keys.is_empty() {
            0.0
        } else {
            keys.iter().map(|c| m[c]).sum::<f64>() / keys.len() as f64
        }
    };
    let all_classes: Vec<u32> = classes.iter().copied().collect();

    Ok(AssignmentQuality {
        pixel_accuracy: if no_scored_cells {
            0.0
        } else {
            correct as f64 / scored as f64
        },
        mean_class_iou: mean(&per_class_iou, &all_classes),
        per_class_iou,
        mean_foreground_coverage_iou: if no_scored_cells {
            0.0
        } else {
            mean(&per_class_coverage_iou, &oracle_classes)
        },
        per_class_coverage_iou,
        scored_cells: scored,
        no_scored_cells,
    })
}

/// Human-readable aligned table for stdout.
pub fn render_report(report: &EvalReport) -> String {
    let mut out = String::new();
    out.push_str(&format!("# {}\n", report.note));
    out.push_str(&format!("{:<28} {:>10}\n", "instances", report.instances));
    out.push_str(&format!(
        "{:<28} {:>10}\n",
        "degenerate fallbacks", report.degenerate_fallbacks
    ));
    out.push_str(&format!("{:<28} {:>10.4}\n", "mIoU", report.miou));
    out.push_str(&format!(
        "{:<28} {:>10.4}\n",
        "recall@0.50", report.recall_at_50
    ));
    out.push_str(&format!(
        "{:<28} {:>10.4}\n",
        "recall@0.75", report.recall_at_75
    ));
    for (c, iou) in &report.per_class_miou {
        out.push_str(&format!(
            "{:<28} {:>10.4}\n",
            format!("class {c} mIoU"),
            iou
        ));
    }
    if let Some(a) = &report.assignment {
        out.push_str(&format!(
            "{:<28} {:>10.4}\n",
            "assignment pixel accuracy", a.pixel_accuracy
        ));
        out.push_str(&format!(
            "{:<28} {:>10.4}\n",
            "assignment mean class IoU", a.mean_class_iou
        ));
        out.push_str(&format!(
            "{:<28} {:>10.4}\n",
            "assignment coverage IoU", a.mean_foreground_coverage_iou
        ));
        if a.no_scored_cells {
            out.push_str("(no scored cells: prediction is entirely ignore)\n");
        }
    }
    out
}
