//! Auditing an unlabeled corpus: threshold calibration, scoring and flagging,
//! matching flagged ads against declared ones, disclaimer compliance, and
//! crawl-coverage estimates.

mod calibrate;
mod compliance;
mod coverage;
mod flags;
mod matching;
mod report;

pub use calibrate::{calibrate_threshold, CalibratedThreshold};
pub use compliance::{detect_disclaimer, ComplianceInfo, DisclaimerDetector};
pub use coverage::{coverage_stats, probe_estimate, CoverageStats, CrawlSnapshot, ProbeEstimate};
pub use flags::{score_corpus, Flag, FlagJournal, JournalEvent, Verdict};
pub use matching::{match_declared, DeclaredMatch};
pub use report::{run_audit, AdvertiserRollup, AuditOptions, AuditReport, ComplianceSummary, CorpusCounts};

use thiserror::Error;
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

use crate::eval::EvalError;
use crate::pipeline::PipelineError;

#[derive(Debug, Error)]
pub enum AuditError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("target false-positive rate must be in (0, 1), got {0}")]
    BadTarget(f64),
    #[error("calibration needs both political and non-political scores")]
    SingleClass,
    #[error("need at least two snapshots, got {0}")]
    TooFewSnapshots(usize),
    #[error("first snapshot is empty")]
    EmptyFirstSnapshot,
    #[error("base set is empty")]
    EmptyBase,
    #[error("no probe sets given")]
    NoProbes,
    #[error("unknown flag {0:?}")]
    UnknownFlag(String),
    #[error("verdict {0} needs a reviewer")]
    MissingReviewer(Verdict),
    #[error("journal line {line}: {source}")]
    Journal {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Canonical text for matching and dedup: NFKC, lowercase, whitespace runs
/// collapsed to one space, trimmed.
pub fn normalize_text(s: &str) -> String {
    // lowercasing can produce non-NFKC sequences, hence the second pass
    let lowered: String = s.nfkc().collect::<String>().to_lowercase();
    let lowered: String = lowered.nfkc().collect();
    lowered.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Removes combining marks after canonical decomposition ("política" ->
/// "politica").
pub fn strip_accents(s: &str) -> String {
    s.nfd().filter(|c| !is_combining_mark(*c)).nfc().collect()
}
