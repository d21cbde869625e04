use crate::eval::Label;
use crate::textproc::SparseVector;

use super::{check_both_classes, ModelError};

/// Laplace smoothing used when none is configured.
pub const DEFAULT_ALPHA: f64 = 1.0;

/// Multinomial Naive Bayes over hashed token counts. Index 0 of each pair is
/// the political class, index 1 the non-political class.
#[derive(Debug, Clone, PartialEq)]
pub struct MnbModel {
    pub(crate) dims: usize,
    pub(crate) alpha: f64,
    pub(crate) log_prior: [f64; 2],
    pub(crate) log_likelihood: [Vec<f64>; 2],
}

fn class_index(l: Label) -> usize {
    if l.is_political() {
        0
    } else {
        1
    }
}

/// Fits class priors and smoothed per-bucket likelihoods:
/// `log((count_cj + alpha) / (total_c + alpha * dims))`.
pub fn train_mnb(features: &[SparseVector], labels: &[Label], alpha: f64) -> Result<MnbModel, ModelError> {
    if features.len() != labels.len() {
        return Err(ModelError::LengthMismatch {
            features: features.len(),
            labels: labels.len(),
        });
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(ModelError::BadAlpha(alpha));
    }
    check_both_classes(labels)?;
    let dims = features[0].dims();

    let mut counts = [vec![0.0f64; dims], vec![0.0f64; dims]];
    let mut totals = [0.0f64; 2];
    let mut docs = [0usize; 2];
    for (x, &l) in features.iter().zip(labels) {
        if x.dims() != dims {
            return Err(ModelError::DimMismatch {
                expected: dims,
                found: x.dims(),
            });
        }
        let c = class_index(l);
        docs[c] += 1;
        for (j, n) in x.iter() {
            counts[c][j] += f64::from(n);
            totals[c] += f64::from(n);
        }
    }

    let n = labels.len() as f64;
    let log_prior = [(docs[0] as f64 / n).ln(), (docs[1] as f64 / n).ln()];
    let log_likelihood = [0, 1].map(|c| {
        let log_denom = (totals[c] + alpha * dims as f64).ln();
        counts[c].iter().map(|&k| (k + alpha).ln() - log_denom).collect::<Vec<_>>()
    });
    Ok(MnbModel {
        dims,
        alpha,
        log_prior,
        log_likelihood,
    })
}

impl MnbModel {
    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn log_prior(&self) -> [f64; 2] {
        self.log_prior
    }

    pub fn log_likelihood(&self, political: bool) -> &[f64] {
        &self.log_likelihood[if political { 0 } else { 1 }]
    }

    /// Unnormalized log posteriors `[political, non_political]`.
    pub fn joint_log_likelihood(&self, x: &SparseVector) -> Result<[f64; 2], ModelError> {
        if x.dims() != self.dims {
            return Err(ModelError::DimMismatch {
                expected: self.dims,
                found: x.dims(),
            });
        }
        Ok([0, 1].map(|c| {
            self.log_prior[c]
                + x.iter()
                    .map(|(j, n)| f64::from(n) * self.log_likelihood[c][j])
                    .sum::<f64>()
        }))
    }

    /// Probability of the political class: a two-way softmax over the log
    /// posteriors, shifted by their maximum.
    pub fn predict_proba(&self, x: &SparseVector) -> Result<f64, ModelError> {
        let [lp, ln] = self.joint_log_likelihood(x)?;
        let m = lp.max(ln);
        let (ep, en) = ((lp - m).exp(), (ln - m).exp());
        Ok(ep / (ep + en))
    }
}
