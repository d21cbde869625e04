use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{match_declared, score_corpus, AuditError, DeclaredMatch, DisclaimerDetector, Flag};
use crate::corpus::{dedup_by_caption, filter_language, filter_period, AdStore, PeriodFilter};
use crate::pipeline::Classifier;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditOptions {
    pub model_id: String,
    pub threshold: f64,
    /// Keep only ads in this language (BCP-47 primary subtag match).
    pub language: Option<String>,
    pub period: Option<PeriodFilter>,
    pub dedup: bool,
    pub strict_cnpj: bool,
}

/// Corpus size after each filter, in the order they run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusCounts {
    pub input: usize,
    pub after_language: usize,
    pub after_period: usize,
    pub after_dedup: usize,
}

/// Disclaimer findings over the flagged ads.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplianceSummary {
    pub with_keyword: usize,
    pub with_tax_id: usize,
    pub compliant: usize,
    pub compliant_advertisers: usize,
    pub compliant_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdvertiserRollup {
    pub advertiser_id: String,
    pub advertiser_name: String,
    pub flagged: usize,
    pub matched_declared: usize,
    pub compliant: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub model_id: String,
    pub threshold: f64,
    pub corpus: CorpusCounts,
    pub flagged_count: usize,
    pub flags: Vec<Flag>,
    pub matched_declared: Vec<DeclaredMatch>,
    pub compliance: ComplianceSummary,
    /// Most-flagged advertisers first, ties by id.
    pub advertisers: Vec<AdvertiserRollup>,
}

/// Filters the collector corpus (language, period, caption dedup), flags ads
/// scoring at least the threshold, matches them against declared ads and
/// checks their disclaimers. Output depends only on the inputs.
pub fn run_audit(
    classifier: &Classifier,
    corpus: &AdStore,
    declared: &AdStore,
    opts: &AuditOptions,
) -> Result<AuditReport, AuditError> {
    let input = corpus.len();
    let store = match &opts.language {
        Some(lang) => filter_language(corpus, lang),
        None => corpus.clone(),
    };
    let after_language = store.len();
    let store = match &opts.period {
        Some(p) => filter_period(&store, p),
        None => store,
    };
    let after_period = store.len();
    let store = if opts.dedup { dedup_by_caption(&store) } else { store };
    let counts = CorpusCounts {
        input,
        after_language,
        after_period,
        after_dedup: store.len(),
    };

    let flags = score_corpus(classifier, &store, opts.threshold, &opts.model_id)?;
    let matched = match_declared(&flags, &store, declared);
    let detector = DisclaimerDetector {
        strict_cnpj: opts.strict_cnpj,
    };

    let matched_ids: HashSet<&str> = matched.iter().map(|m| m.flag_id.as_str()).collect();
    let mut compliance = ComplianceSummary {
        with_keyword: 0,
        with_tax_id: 0,
        compliant: 0,
        compliant_advertisers: 0,
        compliant_ids: Vec::new(),
    };
    let mut rollups: BTreeMap<&str, AdvertiserRollup> = BTreeMap::new();
    for flag in &flags {
        let ad = store.get(&flag.ad_id).expect("flags come from the store");
        let info = detector.detect(ad);
        compliance.with_keyword += info.has_electoral_keyword as usize;
        compliance.with_tax_id += (info.cpf.is_some() || info.cnpj.is_some()) as usize;
        let roll = rollups.entry(ad.advertiser_id.as_str()).or_insert_with(|| AdvertiserRollup {
            advertiser_id: ad.advertiser_id.clone(),
            advertiser_name: ad.advertiser_name.clone(),
            flagged: 0,
            matched_declared: 0,
            compliant: 0,
        });
        roll.flagged += 1;
        roll.matched_declared += matched_ids.contains(ad.id.as_str()) as usize;
        if info.compliant {
            compliance.compliant += 1;
            compliance.compliant_ids.push(ad.id.clone());
            roll.compliant += 1;
        }
    }
    compliance.compliant_ids.sort();
    compliance.compliant_advertisers = rollups.values().filter(|r| r.compliant > 0).count();
    let mut advertisers: Vec<AdvertiserRollup> = rollups.into_values().collect();
    advertisers.sort_by(|a, b| b.flagged.cmp(&a.flagged).then_with(|| a.advertiser_id.cmp(&b.advertiser_id)));

    Ok(AuditReport {
        model_id: opts.model_id.clone(),
        threshold: opts.threshold,
        corpus: counts,
        flagged_count: flags.len(),
        flags,
        matched_declared: matched,
        compliance,
        advertisers,
    })
}
