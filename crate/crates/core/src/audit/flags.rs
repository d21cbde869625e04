use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::AuditError;
use crate::corpus::{AdRecord, AdStore};
use crate::par;
use crate::pipeline::Classifier;

/// Triage outcome for a flagged ad.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Unreviewed,
    Political,
    NonPolitical,
    Unsure,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Unreviewed => "unreviewed",
            Verdict::Political => "political",
            Verdict::NonPolitical => "non_political",
            Verdict::Unsure => "unsure",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Verdict {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "unreviewed" => Ok(Verdict::Unreviewed),
            "political" => Ok(Verdict::Political),
            "non_political" => Ok(Verdict::NonPolitical),
            "unsure" => Ok(Verdict::Unsure),
            other => Err(format!("unknown verdict {other:?}")),
        }
    }
}

/// An ad the classifier scored at or above the threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Flag {
    pub ad_id: String,
    pub score: f64,
    pub model_id: String,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reviewer: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reviewed_at: Option<DateTime<Utc>>,
}

/// Flags every ad scoring at least `threshold`, highest score first (ties by
/// id). Scoring fans out per ad; the sort makes the output order fixed.
pub fn score_corpus(
    classifier: &Classifier,
    store: &AdStore,
    threshold: f64,
    model_id: &str,
) -> Result<Vec<Flag>, AuditError> {
    let records: Vec<&AdRecord> = store.records();
    let scores = par::try_map(&records, |r| classifier.score_text(&r.text))?;
    let mut flags: Vec<Flag> = records
        .iter()
        .zip(scores)
        .filter(|(_, s)| *s >= threshold)
        .map(|(r, score)| Flag {
            ad_id: r.id.clone(),
            score,
            model_id: model_id.to_string(),
            verdict: Verdict::Unreviewed,
            reviewer: None,
            reviewed_at: None,
        })
        .collect();
    flags.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.ad_id.cmp(&b.ad_id)));
    Ok(flags)
}

/// One line of the flags journal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum JournalEvent {
    FlagCreated {
        flag: Flag,
    },
    VerdictSet {
        ad_id: String,
        verdict: Verdict,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        reviewer: Option<String>,
        at: DateTime<Utc>,
    },
}

/// Append-only record of flags and verdict changes. Current state is the
/// replay of every event. Each append is flushed and synced before the call
/// returns, so an acknowledged write survives a crash. One writer at a time:
/// callers sharing a journal wrap it in a lock.
#[derive(Debug)]
pub struct FlagJournal {
    path: Option<PathBuf>,
    file: Option<File>,
    flags: IndexMap<String, Flag>,
    events: usize,
}

impl FlagJournal {
    /// A journal that keeps events in memory only.
    pub fn in_memory() -> Self {
        FlagJournal {
            path: None,
            file: None,
            flags: IndexMap::new(),
            events: 0,
        }
    }

    /// Opens (creating if needed) a journal file and replays it.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, AuditError> {
        let path = path.as_ref().to_path_buf();
        let mut journal = FlagJournal::in_memory();
        if path.exists() {
            let reader = BufReader::new(File::open(&path)?);
            for (i, line) in reader.lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let event: JournalEvent =
                    serde_json::from_str(&line).map_err(|source| AuditError::Journal { line: i + 1, source })?;
                journal.apply(event)?;
            }
        }
        journal.file = Some(OpenOptions::new().create(true).append(true).open(&path)?);
        journal.path = Some(path);
        Ok(journal)
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    /// Number of events replayed or written.
    pub fn event_count(&self) -> usize {
        self.events
    }

    fn apply(&mut self, event: JournalEvent) -> Result<(), AuditError> {
        match event {
            JournalEvent::FlagCreated { flag } => {
                self.flags.insert(flag.ad_id.clone(), flag);
            }
            JournalEvent::VerdictSet {
                ad_id,
                verdict,
                reviewer,
                at,
            } => {
                let flag = self.flags.get_mut(&ad_id).ok_or(AuditError::UnknownFlag(ad_id))?;
                flag.verdict = verdict;
                let reviewed = verdict != Verdict::Unreviewed;
                flag.reviewer = reviewer.filter(|_| reviewed);
                flag.reviewed_at = reviewed.then_some(at);
            }
        }
        self.events += 1;
        Ok(())
    }

    fn append(&mut self, event: &JournalEvent) -> Result<(), AuditError> {
        if let Some(file) = &mut self.file {
            let mut line = serde_json::to_vec(event).expect("journal events serialize");
            line.push(b'\n');
            file.write_all(&line)?;
            file.sync_data()?;
        }
        Ok(())
    }

    /// Records flags not already in the journal. Returns how many were new.
    pub fn create_flags(&mut self, flags: &[Flag]) -> Result<usize, AuditError> {
        let mut added = 0;
        for flag in flags {
            if self.flags.contains_key(&flag.ad_id) {
                continue;
            }
            let event = JournalEvent::FlagCreated { flag: flag.clone() };
            self.append(&event)?;
            self.apply(event)?;
            added += 1;
        }
        Ok(added)
    }

    /// Journals a verdict, then applies it. Reviewed verdicts need a reviewer.
    pub fn set_verdict(
        &mut self,
        ad_id: &str,
        verdict: Verdict,
        reviewer: Option<&str>,
        at: DateTime<Utc>,
    ) -> Result<Flag, AuditError> {
        if !self.flags.contains_key(ad_id) {
            return Err(AuditError::UnknownFlag(ad_id.to_string()));
        }
        let reviewer = reviewer.map(str::trim).filter(|r| !r.is_empty());
        if verdict != Verdict::Unreviewed && reviewer.is_none() {
            return Err(AuditError::MissingReviewer(verdict));
        }
        let event = JournalEvent::VerdictSet {
            ad_id: ad_id.to_string(),
            verdict,
            reviewer: reviewer.map(str::to_string),
            at,
        };
        self.append(&event)?;
        self.apply(event)?;
        Ok(self.flags[ad_id].clone())
    }

    pub fn get(&self, ad_id: &str) -> Option<&Flag> {
        self.flags.get(ad_id)
    }

    /// Flags sorted by descending score then id, optionally by verdict.
    pub fn flags(&self, verdict: Option<Verdict>) -> Vec<Flag> {
        let mut out: Vec<Flag> = self
            .flags
            .values()
            .filter(|f| verdict.is_none_or(|v| f.verdict == v))
            .cloned()
            .collect();
        out.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.ad_id.cmp(&b.ad_id)));
        out
    }

    pub fn len(&self) -> usize {
        self.flags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flags.is_empty()
    }
}
