use serde::{Deserialize, Serialize};

use super::AuditError;
use crate::eval::{EvalError, Label, ABOVE_ONE};

/// A decision threshold chosen to respect a false-positive budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibratedThreshold {
    pub threshold: f64,
    pub target_fpr: f64,
    pub achieved_fpr: f64,
    pub achieved_tpr: f64,
    pub positives: usize,
    pub negatives: usize,
}

impl CalibratedThreshold {
    pub fn calibration_size(&self) -> usize {
        self.positives + self.negatives
    }
}

/// Smallest candidate threshold whose false-positive rate (share of
/// negatives scoring at least the threshold) is within `target_fpr`.
/// Candidates are the observed scores plus a sentinel just above 1, which is
/// always feasible, so the result may have a TPR of 0.
pub fn calibrate_threshold(scores: &[f64], labels: &[Label], target_fpr: f64) -> Result<CalibratedThreshold, AuditError> {
    if !(target_fpr > 0.0 && target_fpr < 1.0) {
        return Err(AuditError::BadTarget(target_fpr));
    }
    if scores.len() != labels.len() {
        return Err(EvalError::LengthMismatch(scores.len(), labels.len()).into());
    }
    if let Some((i, &s)) = scores.iter().enumerate().find(|(_, s)| !(0.0..=1.0).contains(*s)) {
        return Err(EvalError::ScoreOutOfRange(s, i).into());
    }
    let mut neg: Vec<f64> = Vec::new();
    let mut pos: Vec<f64> = Vec::new();
    for (&s, l) in scores.iter().zip(labels) {
        if l.is_political() {
            pos.push(s);
        } else {
            neg.push(s);
        }
    }
    if neg.is_empty() || pos.is_empty() {
        return Err(AuditError::SingleClass);
    }
    neg.sort_by(f64::total_cmp);
    pos.sort_by(f64::total_cmp);
    let at_least = |sorted: &[f64], t: f64| sorted.len() - sorted.partition_point(|&s| s < t);

    let mut candidates: Vec<f64> = scores.to_vec();
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();
    candidates.push(ABOVE_ONE);

    // fpr is nonincreasing in t, so the first feasible candidate is minimal
    let n = neg.len() as f64;
    let threshold = candidates
        .into_iter()
        .find(|&t| at_least(&neg, t) as f64 / n <= target_fpr)
        .expect("the sentinel is always feasible");
    Ok(CalibratedThreshold {
        threshold,
        target_fpr,
        achieved_fpr: at_least(&neg, threshold) as f64 / n,
        achieved_tpr: at_least(&pos, threshold) as f64 / pos.len() as f64,
        positives: pos.len(),
        negatives: neg.len(),
    })
}
