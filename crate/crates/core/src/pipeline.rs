//! Text in, probability out: featurization per model kind, training on
//! tokenized examples, and a [`Classifier`] that scores raw text the same way
//! everywhere (CLI, service, audit).

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::Label;
use crate::models::{
    cnn_train, train_logreg, train_mnb, AnyModel, CnnConfig, CnnModel, ModelError, RmsProp, TrainConfig,
    DEFAULT_ALPHA,
};
use crate::par;
use crate::textproc::{
    embed_sequence, hash_vectorize, mean_embedding, tokenize, EmbeddingTable, SparseVector, TextError, TokenMatrix,
    TokenSeq, DEFAULT_HASH_DIMS,
};

pub use crate::models::ModelKind;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Text(#[from] TextError),
    #[error("{0} models need word embeddings")]
    MissingEmbeddings(ModelKind),
    #[error("embedding dimension {found} does not match model dimension {expected}")]
    EmbeddingDim { expected: usize, found: usize },
    #[error("features were built for {found}, not {expected}")]
    FeatureKind { expected: ModelKind, found: ModelKind },
}

/// Everything needed to train one model kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub train: TrainConfig,
    /// Hashing dimensions for MNB.
    pub hash_dims: usize,
    /// Laplace smoothing for MNB.
    pub alpha: f64,
    /// CNN shape. `embed_dim` is overwritten by the embedding table's.
    pub cnn: CnnConfig,
}

impl ModelSpec {
    /// Per-kind defaults. Logistic regression uses full-batch gradient descent
    /// and needs far more epochs than the minibatch CNN.
    pub fn defaults(kind: ModelKind) -> Self {
        let train = match kind {
            ModelKind::LogReg => TrainConfig {
                epochs: 300,
                lr: 0.1,
                grid: Some(Default::default()),
                ..TrainConfig::default()
            },
            _ => TrainConfig::default(),
        };
        ModelSpec {
            kind,
            train,
            hash_dims: DEFAULT_HASH_DIMS,
            alpha: DEFAULT_ALPHA,
            cnn: CnnConfig::default(),
        }
    }

    pub fn needs_embeddings(&self) -> bool {
        self.kind != ModelKind::Mnb
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.train.seed = seed;
        self
    }
}

/// Precomputed inputs for one model kind, one entry per example.
#[derive(Debug, Clone)]
pub enum Features {
    Hashed(Vec<SparseVector>),
    Mean(Vec<Vec<f64>>),
    Sequence(Vec<TokenMatrix>),
}

impl Features {
    pub fn len(&self) -> usize {
        match self {
            Features::Hashed(v) => v.len(),
            Features::Mean(v) => v.len(),
            Features::Sequence(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn kind(&self) -> ModelKind {
        match self {
            Features::Hashed(_) => ModelKind::Mnb,
            Features::Mean(_) => ModelKind::LogReg,
            Features::Sequence(_) => ModelKind::Cnn,
        }
    }
}

fn require_embeddings(kind: ModelKind, emb: Option<&EmbeddingTable>) -> Result<&EmbeddingTable, PipelineError> {
    emb.ok_or(PipelineError::MissingEmbeddings(kind))
}

/// Builds the feature representation `kind` consumes.
pub fn featurize(
    spec: &ModelSpec,
    tokens: &[TokenSeq],
    emb: Option<&EmbeddingTable>,
) -> Result<Features, PipelineError> {
    Ok(match spec.kind {
        ModelKind::Mnb => Features::Hashed(par::try_map(tokens, |t| hash_vectorize(t, spec.hash_dims))?),
        ModelKind::LogReg => {
            let table = require_embeddings(spec.kind, emb)?;
            Features::Mean(par::map(tokens, |t| mean_embedding(t, table)))
        }
        ModelKind::Cnn => {
            let table = require_embeddings(spec.kind, emb)?;
            Features::Sequence(par::map(tokens, |t| embed_sequence(t, table)))
        }
    })
}

/// Trains on the rows `idx` of `features`.
pub fn train_on_features(
    spec: &ModelSpec,
    features: &Features,
    labels: &[Label],
    idx: &[usize],
) -> Result<AnyModel, PipelineError> {
    if features.kind() != spec.kind {
        return Err(PipelineError::FeatureKind {
            expected: spec.kind,
            found: features.kind(),
        });
    }
    let y: Vec<Label> = idx.iter().map(|&i| labels[i]).collect();
    Ok(match features {
        Features::Hashed(x) => {
            let x: Vec<SparseVector> = idx.iter().map(|&i| x[i].clone()).collect();
            AnyModel::Mnb(train_mnb(&x, &y, spec.alpha)?)
        }
        Features::Mean(x) => {
            let x: Vec<Vec<f64>> = idx.iter().map(|&i| x[i].clone()).collect();
            AnyModel::LogReg(train_logreg(&x, &y, &spec.train)?)
        }
        Features::Sequence(x) => {
            let embed_dim = x.first().map(|m| m.dim()).unwrap_or(spec.cnn.embed_dim);
            let cfg = CnnConfig {
                embed_dim,
                ..spec.cnn.clone()
            };
            let model = CnnModel::new(cfg, spec.train.seed)?;
            let data: Vec<(&TokenMatrix, Label)> = idx.iter().zip(&y).map(|(&i, &l)| (&x[i], l)).collect();
            let mut opt = RmsProp::new(spec.train.lr);
            let (model, _) = cnn_train(&data, &spec.train, model, &mut opt)?;
            AnyModel::Cnn(model)
        }
    })
}

/// Probability of the political class for each row in `idx`.
pub fn predict_features(model: &AnyModel, features: &Features, idx: &[usize]) -> Result<Vec<f64>, PipelineError> {
    if features.kind() != model.tag() {
        return Err(PipelineError::FeatureKind {
            expected: model.tag(),
            found: features.kind(),
        });
    }
    let out = match (model, features) {
        (AnyModel::Mnb(m), Features::Hashed(x)) => par::try_map(idx, |&i| m.predict_proba(&x[i])),
        (AnyModel::LogReg(m), Features::Mean(x)) => par::try_map(idx, |&i| m.predict_proba(&x[i])),
        (AnyModel::Cnn(m), Features::Sequence(x)) => par::try_map(idx, |&i| m.predict_proba(&x[i])),
        _ => unreachable!("kinds checked above"),
    };
    Ok(out?)
}

/// A trained model plus whatever it needs to turn text into features.
#[derive(Debug, Clone)]
pub struct Classifier {
    model: AnyModel,
    embeddings: Option<Arc<EmbeddingTable>>,
}

impl Classifier {
    /// Checks that embedding-based models get a table of the right width.
    pub fn new(model: AnyModel, embeddings: Option<Arc<EmbeddingTable>>) -> Result<Self, PipelineError> {
        let expected = match &model {
            AnyModel::Mnb(_) => None,
            AnyModel::LogReg(m) => Some(m.dim()),
            AnyModel::Cnn(m) => Some(m.config.embed_dim),
        };
        if let Some(expected) = expected {
            let table = embeddings.as_deref().ok_or(PipelineError::MissingEmbeddings(model.tag()))?;
            if table.dim() != expected {
                return Err(PipelineError::EmbeddingDim {
                    expected,
                    found: table.dim(),
                });
            }
        }
        Ok(Classifier { model, embeddings })
    }

    pub fn kind(&self) -> ModelKind {
        self.model.tag()
    }

    pub fn model(&self) -> &AnyModel {
        &self.model
    }

    pub fn embeddings(&self) -> Option<&Arc<EmbeddingTable>> {
        self.embeddings.as_ref()
    }

    pub fn score_tokens(&self, tokens: &TokenSeq) -> Result<f64, PipelineError> {
        let p = match &self.model {
            AnyModel::Mnb(m) => m.predict_proba(&hash_vectorize(tokens, m.dims())?)?,
            AnyModel::LogReg(m) => {
                let table = self.embeddings.as_deref().expect("checked in new");
                m.predict_proba(&mean_embedding(tokens, table))?
            }
            AnyModel::Cnn(m) => {
                let table = self.embeddings.as_deref().expect("checked in new");
                m.predict_proba(&embed_sequence(tokens, table))?
            }
        };
        Ok(p)
    }

    pub fn score_text(&self, text: &str) -> Result<f64, PipelineError> {
        self.score_tokens(&tokenize(text))
    }

    /// Scores many texts, in parallel when enabled. Output order follows input.
    pub fn score_texts<S: AsRef<str> + Sync>(&self, texts: &[S]) -> Result<Vec<f64>, PipelineError> {
        par::try_map(texts, |t| self.score_text(t.as_ref()))
    }
}

/// Tokenizes, featurizes and trains on every example.
pub fn train_classifier(
    spec: &ModelSpec,
    texts: &[&str],
    labels: &[Label],
    embeddings: Option<Arc<EmbeddingTable>>,
) -> Result<Classifier, PipelineError> {
    let tokens = par::map(texts, |t| tokenize(t));
    let features = featurize(spec, &tokens, embeddings.as_deref())?;
    let idx: Vec<usize> = (0..tokens.len()).collect();
    let model = train_on_features(spec, &features, labels, &idx)?;
    Classifier::new(model, embeddings)
}
