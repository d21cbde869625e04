use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{compute_metrics, roc_curve, stratified_kfold, EvalError, Label, Metrics};
use crate::par;
use crate::pipeline::{featurize, predict_features, train_on_features, ModelSpec, PipelineError};
use crate::textproc::{EmbeddingTable, TokenSeq};

/// Two-sided 90% normal quantile used for fold confidence intervals.
pub const Z_90: f64 = 1.645;


/// Mean over folds with a 90% interval `mean ± Z_90 * s / sqrt(k)`,
/// `s` being the sample standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    pub std: f64,
    pub ci90_half_width: f64,
    pub min: f64,
    pub max: f64,
}

impl MetricSummary {
    pub fn from_values(values: &[f64]) -> Self {
        let k = values.len() as f64;
        // shifting by the first value keeps constant inputs exact
        let shift = values[0];
        let mean = shift + values.iter().map(|v| v - shift).sum::<f64>() / k;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0)
        } else {
            0.0
        };
        let std = var.sqrt();
        MetricSummary {
            mean,
            std,
            ci90_half_width: Z_90 * std / k.sqrt(),
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub train_size: usize,
    pub test_size: usize,
    pub metrics: Metrics,
    pub tpr_at_1pct_fpr: f64,
    pub tpr_at_3pct_fpr: f64,
}

impl FoldResult {
    fn named_values(&self) -> [(&'static str, f64); 11] {
        let m = &self.metrics;
        [
            ("accuracy", m.accuracy),
            ("auc", m.auc),
            ("macro_f1", m.macro_f1),
            ("political_precision", m.political.precision),
            ("political_recall", m.political.recall),
            ("political_f1", m.political.f1),
            ("non_political_precision", m.non_political.precision),
            ("non_political_recall", m.non_political.recall),
            ("non_political_f1", m.non_political.f1),
            ("tpr_at_1pct_fpr", self.tpr_at_1pct_fpr),
            ("tpr_at_3pct_fpr", self.tpr_at_3pct_fpr),
        ]
    }
}

/// Cross-validation results. Serializes deterministically: no timestamps,
/// sorted summary keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub model: String,
    pub k: usize,
    pub seed: u64,
    pub examples: usize,
    pub threshold: f64,
    pub folds: Vec<FoldResult>,
    pub summary: BTreeMap<String, MetricSummary>,
}

impl CvReport {
    pub fn mean(&self, metric: &str) -> Option<f64> {
        self.summary.get(metric).map(|s| s.mean)
    }
}

#[derive(Debug, Clone)]
pub struct CvOutcome {
    pub report: CvReport,
    /// Held-out score of every example, from the fold that tested it.
    pub oof_scores: Vec<f64>,
}

/// Stratified k-fold driver around any `fit_predict(fold, train, test)` that
/// returns one score per test index. Folds run in parallel when enabled;
/// assembly is in fold order, so the report does not depend on scheduling.
pub fn cross_validate_scores<F>(
    labels: &[Label],
    k: usize,
    seed: u64,
    model_name: &str,
    threshold: f64,
    fit_predict: F,
) -> Result<CvOutcome, EvalError>
where
    F: Fn(usize, &[usize], &[usize]) -> Result<Vec<f64>, PipelineError> + Sync + Send,
{
    let plan = stratified_kfold(labels, k, seed)?;
    let splits: Vec<(Vec<usize>, Vec<usize>)> = (0..k).map(|f| (plan.train_indices(f), plan.test_indices(f))).collect();
    for (fold, (train, test)) in splits.iter().enumerate() {
        for idx in [train, test] {
            let pos = idx.iter().filter(|&&i| labels[i].is_political()).count();
            let missing = if pos == 0 {
                Some("political")
            } else if pos == idx.len() {
                Some("non-political")
            } else {
                None
            };
            if let Some(missing) = missing {
                return Err(EvalError::FoldMissingClass { fold, missing });
            }
        }
    }

    let fold_scores = par::map_range(k, |f| fit_predict(f, &splits[f].0, &splits[f].1));

    let mut oof = vec![f64::NAN; labels.len()];
    let mut folds = Vec::with_capacity(k);
    for (fold, (scores, (train, test))) in fold_scores.into_iter().zip(&splits).enumerate() {
        let scores = scores.map_err(|source| EvalError::Training { fold, source })?;
        if scores.len() != test.len() {
            return Err(EvalError::LengthMismatch(scores.len(), test.len()));
        }
        let y: Vec<Label> = test.iter().map(|&i| labels[i]).collect();
        let metrics = compute_metrics(&scores, &y, threshold)?;
        let roc = roc_curve(&scores, &y)?;
        let tpr = |t: f64| roc.tpr_at_fpr(t).map(|op| op.tpr);
        folds.push(FoldResult {
            fold,
            train_size: train.len(),
            test_size: test.len(),
            metrics,
            tpr_at_1pct_fpr: tpr(0.01)?,
            tpr_at_3pct_fpr: tpr(0.03)?,
        });
        for (&i, s) in test.iter().zip(scores) {
            oof[i] = s;
        }
    }

    let mut columns: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for f in &folds {
        for (name, v) in f.named_values() {
            columns.entry(name.to_string()).or_default().push(v);
        }
    }
    let summary = columns
        .into_iter()
        .map(|(name, vals)| (name, MetricSummary::from_values(&vals)))
        .collect();

    Ok(CvOutcome {
        report: CvReport {
            model: model_name.to_string(),
            k,
            seed,
            examples: labels.len(),
            threshold,
            folds,
            summary,
        },
        oof_scores: oof,
    })
}

/// Seed for the model trained in `fold`: distinct per fold, fixed per run.
pub fn fold_seed(base: u64, fold: usize) -> u64 {
    base.wrapping_add(1 + fold as u64)
}

/// Cross-validates `spec` on tokenized examples. Features are built once;
/// each fold trains with [`fold_seed`] and predicts its test rows.
pub fn cross_validate(
    tokens: &[TokenSeq],
    labels: &[Label],
    spec: &ModelSpec,
    embeddings: Option<&EmbeddingTable>,
    k: usize,
    seed: u64,
) -> Result<CvOutcome, EvalError> {
    if tokens.len() != labels.len() {
        return Err(EvalError::LengthMismatch(tokens.len(), labels.len()));
    }
    let features = featurize(spec, tokens, embeddings).map_err(|source| EvalError::Training { fold: 0, source })?;
    cross_validate_scores(labels, k, seed, spec.kind.as_str(), 0.5, |fold, train, test| {
        let spec = spec.clone().with_seed(fold_seed(spec.train.seed, fold));
        let model = train_on_features(&spec, &features, labels, train)?;
        predict_features(&model, &features, test)
    })
}
