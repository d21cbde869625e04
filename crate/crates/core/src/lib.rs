//! Auditing toolkit for political advertising on social platforms.
//!
//! The crate covers the whole batch pipeline:
//!
//! * [`corpus`]: the ad data model, JSONL ingestion and the corpus filters
//!   (caption dedup, language, electoral period).
//! * [`textproc`]: tokenization, feature hashing and word-embedding features.
//! * [`models`]: multinomial Naive Bayes, logistic regression with grid search
//!   and a sentence CNN trained with RMSProp, plus a binary model container.
//! * [`eval`]: k-fold cross validation, metrics with confidence intervals,
//!   ROC analysis and inter-annotator agreement.
//! * [`audit`]: threshold calibration, corpus scoring, matching against the
//!   declared-ad archive, disclaimer compliance and crawl coverage.
//! * [`synth`]: a seeded synthetic corpus generator with ground truth, used by
//!   tests and demos.
//!
//! Batch loops (vectorization, scoring, CV folds) go through [`par`], which is
//! backed by rayon when the `parallel` feature is on and runs sequentially
//! otherwise. Results are identical either way.

pub mod audit;
pub mod corpus;
pub mod eval;
pub mod models;
pub mod par;
pub mod pipeline;
pub mod synth;
pub mod textproc;

pub use corpus::{AdRecord, AdSource, AdStore, PeriodFilter};
pub use eval::Label;
pub use pipeline::{Classifier, ModelKind};

/// Version string reported by the CLI and the service.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
