//! Append-only journal of annotator labels.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use adwatch::Label;
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

/// What an annotator said about an ad. `Unsure` is kept in the journal but
/// left out of agreement statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnnotatorLabel {
    Political,
    NonPolitical,
    Unsure,
}

impl AnnotatorLabel {
    pub fn as_label(self) -> Option<Label> {
        match self {
            AnnotatorLabel::Political => Some(Label::Political),
            AnnotatorLabel::NonPolitical => Some(Label::NonPolitical),
            AnnotatorLabel::Unsure => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelEvent {
    pub ad_id: String,
    pub annotator: String,
    pub label: AnnotatorLabel,
    pub at: DateTime<Utc>,
}

#[derive(Debug, thiserror::Error)]
pub enum LabelJournalError {
    #[error("label journal line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("label journal i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// Latest label per (annotator, ad). Every event is synced to disk before
/// [`LabelJournal::record`] returns.
#[derive(Debug)]
pub struct LabelJournal {
    path: Option<PathBuf>,
    file: Option<File>,
    latest: BTreeMap<(String, String), LabelEvent>,
}

impl LabelJournal {
    pub fn in_memory() -> Self {
        LabelJournal {
            path: None,
            file: None,
            latest: BTreeMap::new(),
        }
    }

    pub fn open(path: impl AsRef<Path>) -> Result<Self, LabelJournalError> {
        let path = path.as_ref().to_path_buf();
        let mut j = LabelJournal::in_memory();
        if path.exists() {
            for (i, line) in BufReader::new(File::open(&path)?).lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let ev: LabelEvent =
                    serde_json::from_str(&line).map_err(|source| LabelJournalError::Parse { line: i + 1, source })?;
                j.apply(ev);
            }
        }
        j.file = Some(OpenOptions::new().create(true).append(true).open(&path)?);
        j.path = Some(path);
        Ok(j)
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    fn apply(&mut self, ev: LabelEvent) {
        self.latest.insert((ev.annotator.clone(), ev.ad_id.clone()), ev);
    }

    pub fn record(&mut self, ev: LabelEvent) -> Result<(), LabelJournalError> {
        if let Some(file) = &mut self.file {
            let mut line = serde_json::to_vec(&ev).expect("label events serialize");
            line.push(b'\n');
            file.write_all(&line)?;
            file.sync_data()?;
        }
        self.apply(ev);
        Ok(())
    }

    /// Latest labels, ordered by annotator then ad id.
    pub fn latest(&self, annotator: Option<&str>) -> Vec<LabelEvent> {
        self.latest
            .values()
            .filter(|e| annotator.is_none_or(|a| e.annotator == a))
            .cloned()
            .collect()
    }

    pub fn len(&self) -> usize {
        self.latest.len()
    }

    pub fn is_empty(&self) -> bool {
        self.latest.is_empty()
    }

    /// Paired decisive labels of two annotators over the ads both labeled,
    /// in ad-id order, plus how many shared ads were skipped as unsure.
    pub fn paired(&self, a: &str, b: &str) -> (Vec<String>, Vec<Label>, Vec<Label>, usize) {
        let mut ids = Vec::new();
        let (mut la, mut lb) = (Vec::new(), Vec::new());
        let mut unsure = 0;
        for ((ann, ad), ev) in self.latest.range((a.to_string(), String::new())..) {
            if ann != a {
                break;
            }
            let Some(other) = self.latest.get(&(b.to_string(), ad.clone())) else {
                continue;
            };
            match (ev.label.as_label(), other.label.as_label()) {
                (Some(x), Some(y)) => {
                    ids.push(ad.clone());
                    la.push(x);
                    lb.push(y);
                }
                _ => unsure += 1,
            }
        }
        (ids, la, lb, unsure)
    }
}
