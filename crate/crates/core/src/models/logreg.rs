use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::eval::Label;

use super::{bce_with_logit, check_both_classes, sigmoid, LossHistory, ModelError, TrainConfig};

/// L2-regularized logistic regression on dense features.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRegModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Penalty used during training.
    pub l2: f64,
    /// Learning rate used during training.
    pub lr: f64,
}

impl LogRegModel {
    /// All-zero model; predicts 0.5 everywhere.
    pub fn zeros(dim: usize, lr: f64, l2: f64) -> Self {
        LogRegModel {
            weights: vec![0.0; dim],
            bias: 0.0,
            l2,
            lr,
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    fn logit(&self, x: &[f64]) -> f64 {
        self.bias + self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<f64, ModelError> {
        if x.len() != self.weights.len() {
            return Err(ModelError::DimMismatch {
                expected: self.weights.len(),
                found: x.len(),
            });
        }
        Ok(sigmoid(self.logit(x)))
    }

    /// Mean cross-entropy plus `l2 / 2 * |w|^2`, and its gradient with
    /// respect to `(weights, bias)`.
    pub fn loss_and_grad(&self, features: &[Vec<f64>], labels: &[Label]) -> (f64, Vec<f64>, f64) {
        let n = features.len() as f64;
        let mut gw = vec![0.0; self.weights.len()];
        let mut gb = 0.0;
        let mut loss = 0.0;
        for (x, l) in features.iter().zip(labels) {
            let z = self.logit(x);
            let y = l.target();
            loss += bce_with_logit(z, y);
            let r = sigmoid(z) - y;
            gb += r;
            for (g, v) in gw.iter_mut().zip(x) {
                *g += r * v;
            }
        }
        let sq: f64 = self.weights.iter().map(|w| w * w).sum();
        for (g, w) in gw.iter_mut().zip(&self.weights) {
            *g = *g / n + self.l2 * w;
        }
        (loss / n + 0.5 * self.l2 * sq, gw, gb / n)
    }
}

fn validate(features: &[Vec<f64>], labels: &[Label]) -> Result<usize, ModelError> {
    if features.len() != labels.len() {
        return Err(ModelError::LengthMismatch {
            features: features.len(),
            labels: labels.len(),
        });
    }
    check_both_classes(labels)?;
    let dim = features[0].len();
    for (row, x) in features.iter().enumerate() {
        if x.len() != dim {
            return Err(ModelError::DimMismatch {
                expected: dim,
                found: x.len(),
            });
        }
        if let Some(col) = x.iter().position(|v| !v.is_finite()) {
            return Err(ModelError::NonFiniteFeature { row, col });
        }
    }
    Ok(dim)
}

/// Full-batch gradient descent from zero.
fn fit(
    features: &[Vec<f64>],
    labels: &[Label],
    dim: usize,
    lr: f64,
    l2: f64,
    epochs: usize,
) -> Result<(LogRegModel, LossHistory), ModelError> {
    let mut model = LogRegModel::zeros(dim, lr, l2);
    let mut history = Vec::with_capacity(epochs);
    for _ in 0..epochs {
        let (loss, gw, gb) = model.loss_and_grad(features, labels);
        if !loss.is_finite() {
            return Err(ModelError::Divergence { lr, l2 });
        }
        history.push(loss);
        for (w, g) in model.weights.iter_mut().zip(&gw) {
            *w -= lr * g;
        }
        model.bias -= lr * gb;
    }
    let (loss, _, _) = model.loss_and_grad(features, labels);
    if !loss.is_finite() || model.weights.iter().any(|w| !w.is_finite()) {
        return Err(ModelError::Divergence { lr, l2 });
    }
    Ok((model, history))
}

fn accuracy(model: &LogRegModel, features: &[Vec<f64>], labels: &[Label]) -> f64 {
    let correct = features
        .iter()
        .zip(labels)
        .filter(|(x, l)| (sigmoid(model.logit(x)) >= 0.5) == l.is_political())
        .count();
    correct as f64 / features.len().max(1) as f64
}

/// Trains with `cfg.lr`/`cfg.l2`, or, when `cfg.grid` is set, picks the grid
/// pair with the best accuracy on a seeded 80/20 split (first best in grid
/// order wins) and refits on all data. Divergent grid pairs are skipped.
pub fn train_logreg(features: &[Vec<f64>], labels: &[Label], cfg: &TrainConfig) -> Result<LogRegModel, ModelError> {
    train_logreg_with_history(features, labels, cfg).map(|(m, _)| m)
}

/// [`train_logreg`] plus the per-epoch loss of the final fit.
pub fn train_logreg_with_history(
    features: &[Vec<f64>],
    labels: &[Label],
    cfg: &TrainConfig,
) -> Result<(LogRegModel, LossHistory), ModelError> {
    cfg.validate()?;
    let dim = validate(features, labels)?;
    let (lr, l2) = match &cfg.grid {
        None => (cfg.lr, cfg.l2),
        Some(grid) => {
            let mut order: Vec<usize> = (0..features.len()).collect();
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed));
            let cut = (features.len() * 4 / 5).max(1).min(features.len() - 1);
            let pick = |idx: &[usize]| -> (Vec<Vec<f64>>, Vec<Label>) {
                (
                    idx.iter().map(|&i| features[i].clone()).collect(),
                    idx.iter().map(|&i| labels[i]).collect(),
                )
            };
            let (train_x, train_y) = pick(&order[..cut]);
            let (val_x, val_y) = pick(&order[cut..]);
            let one_class = check_both_classes(&train_y).is_err();

            let mut best: Option<(f64, f64, f64)> = None;
            for &lr in &grid.lr {
                for &l2 in &grid.l2 {
                    let acc = if one_class {
                        0.0
                    } else {
                        match fit(&train_x, &train_y, dim, lr, l2, cfg.epochs) {
                            Ok((m, _)) => accuracy(&m, &val_x, &val_y),
                            Err(ModelError::Divergence { .. }) => continue,
                            Err(e) => return Err(e),
                        }
                    };
                    if best.is_none_or(|(b, _, _)| acc > b) {
                        best = Some((acc, lr, l2));
                    }
                }
            }
            let (_, lr, l2) = best.ok_or(ModelError::Divergence {
                lr: grid.lr.first().copied().unwrap_or(cfg.lr),
                l2: grid.l2.first().copied().unwrap_or(cfg.l2),
            })?;
            (lr, l2)
        }
    };
    fit(features, labels, dim, lr, l2, cfg.epochs)
}
