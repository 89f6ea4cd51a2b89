//! Intersection-over-union evaluation of class masks.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::ClassMask;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ClassIou {
    /// Mask value: 0 for background, class id + 1 otherwise.
    pub label: u32,
    pub iou: f64,
    pub intersection: u64,
    pub union: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FrameIou {
    pub frame: usize,
    pub average_iou: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EvaluationReport {
    pub per_class: Vec<ClassIou>,
    /// Unweighted mean over labels present in the prediction or the truth.
    pub average_iou: f64,
    pub per_frame: Vec<FrameIou>,
    /// Wall-clock seconds per stage; empty unless filled in by the caller.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub timing: BTreeMap<String, f64>,
}

#[derive(Default, Clone, Copy)]
struct Counts {
    inter: u64,
    union: u64,
}

fn accumulate(pred: &ClassMask, truth: &ClassMask, counts: &mut BTreeMap<u32, Counts>) {
    for (&p, &t) in pred.values().iter().zip(truth.values()) {
        if p == t {
            let c = counts.entry(p).or_default();
            c.inter += 1;
            c.union += 1;
        } else {
            counts.entry(p).or_default().union += 1;
            counts.entry(t).or_default().union += 1;
        }
    }
}

fn mean_iou(counts: &BTreeMap<u32, Counts>) -> f64 {
    if counts.is_empty() {
        return 1.0;
    }
    counts.values().map(|c| c.inter as f64 / c.union as f64).sum::<f64>() / counts.len() as f64
}

/// Per-label IoU with pixel counts aggregated over all frames.
pub fn evaluate(pred: &[ClassMask], truth: &[ClassMask]) -> Result<EvaluationReport> {
    if pred.len() != truth.len() {
        return Err(Error::validation(format!(
            "{} predicted frames but {} ground-truth frames",
            pred.len(),
            truth.len()
        )));
    }
    let mut total = BTreeMap::new();
    let mut per_frame = Vec::with_capacity(pred.len());
    for (f, (p, t)) in pred.iter().zip(truth).enumerate() {
        if (p.width(), p.height()) != (t.width(), t.height()) {
            return Err(Error::validation(format!(
                "frame {f}: prediction is {}x{} but truth is {}x{}",
                p.width(),
                p.height(),
                t.width(),
                t.height()
            )));
        }
        let mut frame = BTreeMap::new();
        accumulate(p, t, &mut frame);
        per_frame.push(FrameIou { frame: f, average_iou: mean_iou(&frame) });
        for (label, c) in frame {
            let e: &mut Counts = total.entry(label).or_default();
            e.inter += c.inter;
            e.union += c.union;
        }
    }
    let per_class = total
        .iter()
        .map(|(&label, c)| ClassIou {
            label,
            iou: c.inter as f64 / c.union as f64,
            intersection: c.inter,
            union: c.union,
        })
        .collect();
    Ok(EvaluationReport { per_class, average_iou: mean_iou(&total), per_frame, timing: BTreeMap::new() })
}

impl EvaluationReport {
    pub fn class_iou(&self, label: u32) -> Option<f64> {
        self.per_class.iter().find(|c| c.label == label).map(|c| c.iou)
    }
}
