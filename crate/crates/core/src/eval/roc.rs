use serde::{Deserialize, Serialize};

use super::{check_inputs, EvalError, Label};

/// Smallest `f64` strictly greater than `x` (for finite `x >= 0`).
pub(crate) fn next_above(x: f64) -> f64 {
    f64::from_bits(x.to_bits() + 1)
}

/// Threshold above every score in `[0, 1]`; flags nothing.
pub const ABOVE_ONE: f64 = 1.0 + f64::EPSILON;

/// One operating point: predicting political when `score >= threshold`
/// yields this `(fpr, tpr)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    pub threshold: f64,
}

/// ROC curve from `(0, 0)` to `(1, 1)` with nondecreasing fpr and tpr.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
}

/// Result of [`RocCurve::tpr_at_fpr`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub target_fpr: f64,
    pub fpr: f64,
    pub tpr: f64,
    pub threshold: f64,
}

/// Sweeps every distinct score as a threshold, from a sentinel above the
/// maximum (the `(0, 0)` point) down to the minimum (the `(1, 1)` point).
pub fn roc_curve(scores: &[f64], labels: &[Label]) -> Result<RocCurve, EvalError> {
    let (pos, neg) = check_inputs(scores, labels)?;
    if pos == 0 || neg == 0 {
        return Err(EvalError::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let max = scores[order[0]];
    let mut points = vec![RocPoint {
        fpr: 0.0,
        tpr: 0.0,
        threshold: if max < ABOVE_ONE { ABOVE_ONE } else { next_above(max) },
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let t = scores[order[i]];
        while i < order.len() && scores[order[i]] == t {
            if labels[order[i]].is_political() {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            fpr: fp as f64 / neg as f64,
            tpr: tp as f64 / pos as f64,
            threshold: t,
        });
    }
    Ok(RocCurve { points })
}

impl RocCurve {
    /// Trapezoidal area under the curve.
    pub fn area(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0)
            .sum()
    }

    /// The point with the greatest fpr not exceeding `target_fpr` (and the
    /// highest tpr among those). No interpolation.
    pub fn tpr_at_fpr(&self, target_fpr: f64) -> Result<OperatingPoint, EvalError> {
        if !(0.0..=1.0).contains(&target_fpr) {
            return Err(EvalError::BadTarget(target_fpr));
        }
        let p = self
            .points
            .iter()
            .rev()
            .find(|p| p.fpr <= target_fpr)
            .unwrap_or(&self.points[0]);
        Ok(OperatingPoint {
            target_fpr,
            fpr: p.fpr,
            tpr: p.tpr,
            threshold: p.threshold,
        })
    }

    /// `fpr,tpr,threshold` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("fpr,tpr,threshold\n");
        for p in &self.points {
            out.push_str(&format!("{},{},{}\n", p.fpr, p.tpr, p.threshold));
        }
        out
    }
}
