//! Evaluation harness: k-fold cross validation, classification metrics with
//! confidence intervals, ROC analysis and inter-annotator agreement.

mod agreement;
mod cv;
mod folds;
mod metrics;
mod roc;

pub use agreement::{cohen_kappa, landis_koch, AgreementBand, AgreementReport, Contingency};
pub use cv::{cross_validate, cross_validate_scores, fold_seed, CvOutcome, CvReport, FoldResult, MetricSummary, Z_90};
pub use folds::{kfold_split, stratified_kfold, FoldPlan};
pub use metrics::{auc_rank, compute_metrics, ClassMetrics, Confusion, Metrics};
pub use roc::{roc_curve, OperatingPoint, RocCurve, RocPoint, ABOVE_ONE};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Binary gold-standard label. `Political` is the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Political,
    NonPolitical,
}

impl Label {
    pub fn is_political(self) -> bool {
        self == Label::Political
    }

    pub fn from_political(political: bool) -> Self {
        if political {
            Label::Political
        } else {
            Label::NonPolitical
        }
    }

    /// 1.0 for political, 0.0 otherwise.
    pub fn target(self) -> f64 {
        if self.is_political() {
            1.0
        } else {
            0.0
        }
    }

    pub fn flipped(self) -> Self {
        Self::from_political(!self.is_political())
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Political => "political",
            Label::NonPolitical => "non_political",
        }
    }
}

impl std::str::FromStr for Label {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "political" | "p" | "1" | "true" => Ok(Label::Political),
            "non_political" | "non-political" | "n" | "0" | "false" => Ok(Label::NonPolitical),
            other => Err(EvalError::BadLabel(other.to_string())),
        }
    }
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("length mismatch: {0} scores/labels vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least one example")]
    Empty,
    #[error("only one class present; AUC and ROC are undefined")]
    SingleClass,
    #[error("score {0} at index {1} is outside [0, 1]")]
    ScoreOutOfRange(f64, usize),
    #[error("need n >= k >= 2, got n={n}, k={k}")]
    BadFoldCount { n: usize, k: usize },
    #[error("fold {fold} has no {missing} examples")]
    FoldMissingClass { fold: usize, missing: &'static str },
    #[error("kappa {0} outside [-1, 1]")]
    KappaOutOfRange(f64),
    #[error("target rate {0} outside [0, 1]")]
    BadTarget(f64),
    #[error("unknown label {0:?}")]
    BadLabel(String),
    #[error("scores csv line {line}: {message}")]
    BadCsv { line: usize, message: String },
    #[error("fold {fold}: {source}")]
    Training {
        fold: usize,
        #[source]
        source: crate::pipeline::PipelineError,
    },
}

/// `label,score` rows with a header. Scores use the shortest form that
/// round-trips, so reading the file back gives the same bits.
pub fn scores_to_csv(labels: &[Label], scores: &[f64]) -> String {
    let mut out = String::from("label,score\n");
    for (l, s) in labels.iter().zip(scores) {
        out.push_str(&format!("{},{s}\n", l.as_str()));
    }
    out
}

/// Inverse of [`scores_to_csv`]. Blank lines are ignored.
pub fn parse_scores_csv(text: &str) -> Result<(Vec<Label>, Vec<f64>), EvalError> {
    let mut labels = Vec::new();
    let mut scores = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |message: String| EvalError::BadCsv { line: i + 1, message };
        let (l, s) = line.split_once(',').ok_or_else(|| bad("expected label,score".into()))?;
        labels.push(l.parse().map_err(|e: EvalError| bad(e.to_string()))?);
        scores.push(s.trim().parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?);
    }
    Ok((labels, scores))
}

pub(crate) fn check_inputs(scores: &[f64], labels: &[Label]) -> Result<(usize, usize), EvalError> {
    if scores.len() != labels.len() {
        return Err(EvalError::LengthMismatch(scores.len(), labels.len()));
    }
    if scores.is_empty() {
        return Err(EvalError::Empty);
    }
    if let Some((i, &s)) = scores
        .iter()
        .enumerate()
        .find(|(_, s)| !(0.0..=1.0).contains(*s))
    {
        return Err(EvalError::ScoreOutOfRange(s, i));
    }
    let pos = labels.iter().filter(|l| l.is_political()).count();
    Ok((pos, labels.len() - pos))
}
