//! HTTP facade over adwatch: browse corpora, score text, triage flags,
//! collect annotator labels and read evaluation results.
//!
//! Reads run concurrently over immutable snapshots. Label and verdict writes
//! go through one lock each and are synced to disk before the response.

pub mod labels;
pub mod routes;

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use adwatch::audit::{normalize_text, FlagJournal};
use adwatch::corpus::{ingest, AdStore};
use adwatch::eval::{CvReport, RocCurve};
use adwatch::models::load_model;
use adwatch::textproc::{load_embeddings, EmbeddingTable};
use adwatch::{Classifier, ModelKind};
use thiserror::Error;

pub use labels::{AnnotatorLabel, LabelEvent, LabelJournal, LabelJournalError};
pub use routes::{router, ApiError, ScoreResponse};

/// Threshold used for `flagged` when none is configured.
pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("{path}: {message}")]
    Load { path: PathBuf, message: String },
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn load_err(path: &Path, e: impl std::fmt::Display) -> ServiceError {
    ServiceError::Load {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

/// Files the service starts from. Everything is optional; endpoints that
/// need a missing piece answer with an error instead.
#[derive(Debug, Clone, Default)]
pub struct ServiceConfig {
    pub corpus: Option<PathBuf>,
    pub declared: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    /// Defaults to [`DEFAULT_THRESHOLD`].
    pub threshold: Option<f64>,
    pub flags_journal: Option<PathBuf>,
    pub labels_journal: Option<PathBuf>,
    /// A CvReport JSON file served at `/metrics`.
    pub metrics: Option<PathBuf>,
    /// Held-out scores CSV (`label,score`) turned into the ROC at `/roc`.
    pub scores: Option<PathBuf>,
}

/// A corpus plus the normalized text used by substring search.
#[derive(Debug)]
pub struct LoadedStore {
    pub store: AdStore,
    search_text: Vec<String>,
}

impl LoadedStore {
    pub fn new(store: AdStore) -> Self {
        let search_text = store.iter().map(|r| normalize_text(&r.text)).collect();
        LoadedStore { store, search_text }
    }
}

/// The scoring model currently served.
#[derive(Debug)]
pub struct ActiveModel {
    pub id: String,
    pub classifier: Classifier,
    pub threshold: f64,
}

/// Shared state behind every handler.
#[derive(Debug)]
pub struct SessionState {
    pub collector: Option<LoadedStore>,
    pub declared: Option<LoadedStore>,
    model: RwLock<Option<Arc<ActiveModel>>>,
    pub flags: Mutex<FlagJournal>,
    pub labels: Mutex<LabelJournal>,
    pub metrics: Option<CvReport>,
    pub roc: Option<RocCurve>,
}

pub type AppState = Arc<SessionState>;

impl SessionState {
    pub fn new(collector: Option<AdStore>, declared: Option<AdStore>) -> Self {
        SessionState {
            collector: collector.map(LoadedStore::new),
            declared: declared.map(LoadedStore::new),
            model: RwLock::new(None),
            flags: Mutex::new(FlagJournal::in_memory()),
            labels: Mutex::new(LabelJournal::in_memory()),
            metrics: None,
            roc: None,
        }
    }

    /// The model readers should use. Cloning the `Arc` means a request keeps
    /// the model it started with even if a swap happens meanwhile.
    pub fn model(&self) -> Option<Arc<ActiveModel>> {
        self.model.read().expect("model lock poisoned").clone()
    }

    /// Replaces the served model in one step; returns the previous one.
    pub fn swap_model(&self, next: Option<ActiveModel>) -> Option<Arc<ActiveModel>> {
        let mut slot = self.model.write().expect("model lock poisoned");
        std::mem::replace(&mut *slot, next.map(Arc::new))
    }

    pub fn find_ad(&self, id: &str) -> Option<&adwatch::AdRecord> {
        [&self.collector, &self.declared]
            .into_iter()
            .flatten()
            .find_map(|s| s.store.get(id))
    }

    pub fn has_store(&self) -> bool {
        self.collector.is_some() || self.declared.is_some()
    }
}

fn read_store(path: &Path) -> Result<AdStore, ServiceError> {
    let file = std::fs::File::open(path).map_err(|e| load_err(path, e))?;
    let ingested = ingest(std::io::BufReader::new(file)).map_err(|e| load_err(path, e))?;
    Ok(ingested.store)
}

/// Loads a model file and, for embedding-based models, its embeddings.
/// Naive Bayes ignores `embeddings`.
pub fn load_classifier(model: &Path, embeddings: Option<&Path>) -> Result<Classifier, ServiceError> {
    let bytes = std::fs::read(model).map_err(|e| load_err(model, e))?;
    let any = load_model(&bytes).map_err(|e| load_err(model, e))?;
    let table: Option<Arc<EmbeddingTable>> = match embeddings.filter(|_| any.tag() != ModelKind::Mnb) {
        Some(p) => {
            let f = std::fs::File::open(p).map_err(|e| load_err(p, e))?;
            let loaded = load_embeddings(std::io::BufReader::new(f)).map_err(|e| load_err(p, e))?;
            Some(Arc::new(loaded.table))
        }
        None => None,
    };
    Classifier::new(any, table).map_err(|e| load_err(model, e))
}

/// Builds the session from files on disk.
pub fn load_state(config: &ServiceConfig) -> Result<AppState, ServiceError> {
    let collector = config.corpus.as_deref().map(read_store).transpose()?;
    let declared = config.declared.as_deref().map(read_store).transpose()?;
    let mut state = SessionState::new(collector, declared);
    if let Some(p) = &config.flags_journal {
        state.flags = Mutex::new(FlagJournal::open(p).map_err(|e| load_err(p, e))?);
    }
    if let Some(p) = &config.labels_journal {
        state.labels = Mutex::new(LabelJournal::open(p).map_err(|e| load_err(p, e))?);
    }
    if let Some(p) = &config.metrics {
        let text = std::fs::read_to_string(p).map_err(|e| load_err(p, e))?;
        state.metrics = Some(serde_json::from_str(&text).map_err(|e| load_err(p, e))?);
    }
    if let Some(p) = &config.scores {
        let text = std::fs::read_to_string(p).map_err(|e| load_err(p, e))?;
        let (labels, scores) = adwatch::eval::parse_scores_csv(&text).map_err(|e| load_err(p, e))?;
        state.roc = Some(adwatch::eval::roc_curve(&scores, &labels).map_err(|e| load_err(p, e))?);
    }
    if let Some(p) = &config.model {
        let classifier = load_classifier(p, config.embeddings.as_deref())?;
        let id = p
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "model".into());
        let threshold = config.threshold.unwrap_or(DEFAULT_THRESHOLD);
        if !(0.0..=adwatch::eval::ABOVE_ONE).contains(&threshold) {
            return Err(ServiceError::Config(format!("threshold {threshold} outside [0, 1]")));
        }
        state.swap_model(Some(ActiveModel {
            id,
            classifier,
            threshold,
        }));
    }
    Ok(Arc::new(state))
}

/// Serves until Ctrl-C.
pub async fn serve(state: AppState, addr: SocketAddr) -> Result<(), ServiceError> {
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| ServiceError::Config(format!("cannot bind {addr}: {e}")))?;
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
