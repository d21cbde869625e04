use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{normalize_text, Flag};
use crate::corpus::{AdRecord, AdStore};
use crate::par;

/// A flagged collector ad whose caption equals a declared ad's.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeclaredMatch {
    pub flag_id: String,
    pub declared_id: String,
}

/// Exact matching on normalized caption text. A flagged ad matches at most
/// one declared ad: the earliest `first_seen`, then the smallest id. Flags
/// whose ad is missing from `corpus` are skipped. Output follows flag order.
pub fn match_declared(flags: &[Flag], corpus: &AdStore, declared: &AdStore) -> Vec<DeclaredMatch> {
    let mut index: HashMap<String, &AdRecord> = HashMap::with_capacity(declared.len());
    for d in declared.iter() {
        index
            .entry(normalize_text(&d.text))
            .and_modify(|cur| {
                if (d.first_seen, &d.id) < (cur.first_seen, &cur.id) {
                    *cur = d;
                }
            })
            .or_insert(d);
    }
    par::map(flags, |f| {
        let ad = corpus.get(&f.ad_id)?;
        index.get(&normalize_text(&ad.text)).map(|d| DeclaredMatch {
            flag_id: f.ad_id.clone(),
            declared_id: d.id.clone(),
        })
    })
    .into_iter()
    .flatten()
    .collect()
}
