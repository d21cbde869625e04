//! Classifiers: multinomial Naive Bayes over hashed counts, logistic
//! regression over mean word embeddings, and a sentence CNN trained with
//! RMSProp. All training math is `f64`.

mod cnn;
mod container;
mod logreg;
mod mnb;
mod rmsprop;

pub use cnn::{
    cnn_backward, cnn_forward, cnn_loss, cnn_train, global_max_pool, max_pool_backward, CnnConfig,
    CnnModel, CnnParams, ForwardCache, ForwardMode,
};
pub use container::{load_model, save_model, AnyModel, ModelKind, CONTAINER_MAGIC, CONTAINER_VERSION};
pub use logreg::{train_logreg, train_logreg_with_history, LogRegModel};
pub use mnb::{train_mnb, MnbModel, DEFAULT_ALPHA};
pub use rmsprop::RmsProp;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("degenerate training set: need both classes")]
    DegenerateTrainingSet,
    #[error("{features} feature rows but {labels} labels")]
    LengthMismatch { features: usize, labels: usize },
    #[error("dimension mismatch: model expects {expected}, got {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("smoothing alpha must be positive, got {0}")]
    BadAlpha(f64),
    #[error("non-finite feature at row {row}, column {col}")]
    NonFiniteFeature { row: usize, col: usize },
    #[error("training diverged with lr={lr}, l2={l2}")]
    Divergence { lr: f64, l2: f64 },
    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
    #[error("empty sequence")]
    EmptySequence,
    #[error("invalid configuration: {0}")]
    BadConfig(String),
    #[error("model kind mismatch: expected {expected}, found {found}")]
    KindMismatch { expected: ModelKind, found: ModelKind },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("truncated container")]
    Truncated,
    #[error("not a model container")]
    BadMagic,
    #[error("unsupported container version {0}")]
    UnsupportedVersion(u8),
    #[error("unknown model kind byte {0}")]
    UnknownKind(u8),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Learning-rate and L2 values tried by grid search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub lr: Vec<f64>,
    pub l2: Vec<f64>,
}

impl Default for Grid {
    fn default() -> Self {
        Grid {
            lr: vec![1e-1, 1e-2, 1e-3],
            l2: vec![0.0, 1e-4, 1e-2],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub lr: f64,
    /// L2 penalty for logistic regression when no grid is given.
    pub l2: f64,
    pub grid: Option<Grid>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 10,
            batch_size: 32,
            seed: 0,
            lr: 1e-3,
            l2: 0.0,
            grid: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.epochs == 0 {
            return Err(ModelError::BadConfig("epochs must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(ModelError::BadConfig("batch_size must be >= 1".into()));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(ModelError::BadConfig(format!("lr must be positive, got {}", self.lr)));
        }
        if !(self.l2 >= 0.0) {
            return Err(ModelError::BadConfig(format!("l2 must be >= 0, got {}", self.l2)));
        }
        Ok(())
    }
}

/// Mean loss per epoch, in order.
pub type LossHistory = Vec<f64>;

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Binary cross-entropy of `sigmoid(logit)` against `target`, computed from
/// the logit without forming the probability.
pub(crate) fn bce_with_logit(logit: f64, target: f64) -> f64 {
    // log(1 + e^z) - y z, with a stable softplus
    let softplus = if logit > 0.0 {
        logit + (-logit).exp().ln_1p()
    } else {
        logit.exp().ln_1p()
    };
    softplus - target * logit
}

pub(crate) fn check_both_classes(labels: &[crate::eval::Label]) -> Result<(), ModelError> {
    let pos = labels.iter().filter(|l| l.is_political()).count();
    if pos == 0 || pos == labels.len() {
        return Err(ModelError::DegenerateTrainingSet);
    }
    Ok(())
}
