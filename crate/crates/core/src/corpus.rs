//! Ad data model, JSONL ingestion/persistence and corpus filters.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use chrono::{DateTime, NaiveDate, Utc};
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audit::normalize_text;
use crate::textproc::tokenize;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("failed to read ad stream: {0}")]
    Io(#[from] std::io::Error),
    #[error("failed to write ad record: {0}")]
    Serialize(#[from] serde_json::Error),
    #[error("invalid ad record: {0}")]
    Invalid(String),
    #[error("invalid period: start {start} is after end {end}")]
    InvalidPeriod { start: NaiveDate, end: NaiveDate },
}

/// Where an ad came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdSource {
    /// Seen in a volunteer's feed by the browser collector.
    Collector,
    /// Taken from the platform's archive of self-declared political ads.
    AdLibrary,
}

/// One ad.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdRecord {
    pub id: String,
    pub advertiser_id: String,
    #[serde(default)]
    pub advertiser_name: String,
    /// Caption text.
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disclaimer: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub landing_url: Option<String>,
    pub first_seen: DateTime<Utc>,
    pub last_seen: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub language: Option<String>,
    pub source: AdSource,
    #[serde(default)]
    pub declared_political: bool,
    #[serde(default)]
    pub media_refs: Vec<String>,
}

impl AdRecord {
    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.id.is_empty() {
            return Err(CorpusError::Invalid("empty id".into()));
        }
        if self.first_seen > self.last_seen {
            return Err(CorpusError::Invalid(format!(
                "{}: first_seen after last_seen",
                self.id
            )));
        }
        if self.source == AdSource::AdLibrary && !self.declared_political {
            return Err(CorpusError::Invalid(format!(
                "{}: ad library records must be declared political",
                self.id
            )));
        }
        Ok(())
    }
}

/// Where a store came from.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub origin: Option<String>,
    /// Non-blank lines read.
    pub rows: usize,
    pub skipped: usize,
    pub ingested_at: Option<DateTime<Utc>>,
}

/// A malformed input line.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LineError {
    pub line: usize,
    pub message: String,
}

/// Ads keyed by id in insertion order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AdStore {
    records: IndexMap<String, AdRecord>,
    pub provenance: Provenance,
}

/// Output of [`ingest`].
#[derive(Debug, Clone)]
pub struct Ingested {
    pub store: AdStore,
    pub errors: Vec<LineError>,
}

impl Ingested {
    pub fn skipped(&self) -> usize {
        self.errors.len()
    }
}

impl AdStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a store; later records replace earlier ones with the same id
    /// but keep the original position.
    pub fn from_records<I: IntoIterator<Item = AdRecord>>(records: I) -> Self {
        let mut store = AdStore::new();
        for r in records {
            store.insert(r);
        }
        store
    }

    /// Inserts or replaces by id. Returns the replaced record.
    pub fn insert(&mut self, record: AdRecord) -> Option<AdRecord> {
        self.records.insert(record.id.clone(), record)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&AdRecord> {
        self.records.get(id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.records.contains_key(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &AdRecord> {
        self.records.values()
    }

    pub fn records(&self) -> Vec<&AdRecord> {
        self.records.values().collect()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.records.keys().map(String::as_str)
    }

    /// Keeps the records matching `keep`, in order.
    pub fn filter<F: Fn(&AdRecord) -> bool>(&self, keep: F) -> AdStore {
        AdStore {
            records: self
                .records
                .iter()
                .filter(|(_, r)| keep(r))
                .map(|(k, r)| (k.clone(), r.clone()))
                .collect(),
            provenance: self.provenance.clone(),
        }
    }

    /// Writes one JSON object per line.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<(), CorpusError> {
        for r in self.records.values() {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory cannot fail");
        buf
    }
}

/// Reads newline-delimited JSON ads.
///
/// Blank lines are ignored. Lines that fail to parse or violate an
/// [`AdRecord`] invariant are skipped and reported; a read failure on the
/// stream itself is fatal. Repeated ids keep the latest record.
pub fn ingest<R: BufRead>(reader: R) -> Result<Ingested, CorpusError> {
    let mut store = AdStore::new();
    let mut errors = Vec::new();
    let mut rows = 0;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        rows += 1;
        let parsed = serde_json::from_str::<AdRecord>(&line)
            .map_err(|e| e.to_string())
            .and_then(|r| r.validate().map(|_| r).map_err(|e| e.to_string()));
        match parsed {
            Ok(r) => {
                store.insert(r);
            }
            Err(message) => errors.push(LineError {
                line: i + 1,
                message,
            }),
        }
    }
    store.provenance = Provenance {
        origin: None,
        rows,
        skipped: errors.len(),
        ingested_at: Some(Utc::now()),
    };
    Ok(Ingested { store, errors })
}

/// Keeps one ad per normalized caption: the earliest `first_seen`, ties broken
/// by the lexicographically smallest id. Survivors keep their input order.
pub fn dedup_by_caption(store: &AdStore) -> AdStore {
    let mut best: HashMap<String, &AdRecord> = HashMap::with_capacity(store.len());
    for r in store.iter() {
        let key = normalize_text(&r.text);
        best.entry(key)
            .and_modify(|cur| {
                if (r.first_seen, &r.id) < (cur.first_seen, &cur.id) {
                    *cur = r;
                }
            })
            .or_insert(r);
    }
    let survivors: std::collections::HashSet<&str> = best.values().map(|r| r.id.as_str()).collect();
    store.filter(|r| survivors.contains(r.id.as_str()))
}

/// Languages the stopword heuristic can recognise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Language {
    Portuguese,
    English,
    Spanish,
}

impl Language {
    pub const ALL: [Language; 3] = [Language::Portuguese, Language::English, Language::Spanish];

    pub fn tag(self) -> &'static str {
        match self {
            Language::Portuguese => "pt",
            Language::English => "en",
            Language::Spanish => "es",
        }
    }

    fn stopwords(self) -> &'static [&'static str] {
        match self {
            Language::Portuguese => PT_STOPWORDS,
            Language::English => EN_STOPWORDS,
            Language::Spanish => ES_STOPWORDS,
        }
    }
}

const PT_STOPWORDS: &[&str] = &[
    "a", "o", "e", "é", "de", "do", "da", "dos", "das", "em", "no", "na", "nos", "nas", "um",
    "uma", "para", "com", "por", "que", "não", "se", "os", "as", "ao", "aos", "mais", "mas",
    "como", "seu", "sua", "seus", "suas", "ou", "quando", "muito", "já", "também", "só", "pelo",
    "pela", "até", "isso", "ela", "ele", "você", "vocês", "nosso", "nossa", "está", "são", "foi",
    "tem", "pra", "às", "sem", "eu", "nós", "este", "esta", "essa", "esse",
];

const EN_STOPWORDS: &[&str] = &[
    "the", "a", "an", "and", "or", "of", "to", "in", "on", "for", "with", "at", "by", "from",
    "is", "are", "was", "were", "be", "been", "this", "that", "these", "those", "it", "its",
    "you", "your", "we", "our", "they", "their", "he", "she", "his", "her", "not", "but", "if",
    "so", "do", "does", "have", "has", "will", "can", "more", "all", "just", "about",
];

const ES_STOPWORDS: &[&str] = &[
    "el", "la", "los", "las", "de", "del", "y", "en", "un", "una", "unos", "unas", "para", "con",
    "por", "que", "no", "se", "es", "su", "sus", "al", "lo", "como", "más", "pero", "este",
    "esta", "ese", "esa", "muy", "ya", "también", "hay", "son", "fue", "yo", "nosotros", "usted",
    "ustedes", "nuestro", "nuestra", "cuando", "sin", "sobre", "todo", "entre", "desde", "hasta",
    "porque",
];

/// Guesses the language of untagged text from distinct stopword hits.
///
/// The winner needs at least two distinct hits and strictly more than every
/// other language; anything else is `None`.
pub fn detect_language(text: &str) -> Option<Language> {
    let tokens = tokenize(text);
    let distinct: std::collections::HashSet<&str> = tokens.iter().collect();
    let mut scores: Vec<(Language, usize)> = Language::ALL
        .iter()
        .map(|&l| {
            let hits = l.stopwords().iter().filter(|w| distinct.contains(*w)).count();
            (l, hits)
        })
        .collect();
    scores.sort_by(|a, b| b.1.cmp(&a.1));
    let (best, hits) = scores[0];
    (hits >= 2 && hits > scores[1].1).then_some(best)
}

fn tag_matches(tag: &str, lang: &str) -> bool {
    if tag.eq_ignore_ascii_case(lang) {
        return true;
    }
    // "pt-BR" counts as "pt" when the filter names only the primary subtag
    !lang.contains('-')
        && tag
            .split('-')
            .next()
            .is_some_and(|primary| primary.eq_ignore_ascii_case(lang))
}

/// Keeps ads in language `lang`. Untagged ads go through [`detect_language`].
pub fn filter_language(store: &AdStore, lang: &str) -> AdStore {
    store.filter(|r| match &r.language {
        Some(tag) => tag_matches(tag, lang),
        None => detect_language(&r.text).is_some_and(|l| tag_matches(l.tag(), lang)),
    })
}

/// Inclusive window of UTC calendar days.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodFilter {
    start: NaiveDate,
    end: NaiveDate,
}

impl PeriodFilter {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Result<Self, CorpusError> {
        if start > end {
            return Err(CorpusError::InvalidPeriod { start, end });
        }
        Ok(PeriodFilter { start, end })
    }

    /// The 2018 Brazilian electoral advertising period, Aug 16 to Oct 28.
    pub fn brazil_2018_electoral() -> Self {
        PeriodFilter {
            start: NaiveDate::from_ymd_opt(2018, 8, 16).expect("valid date"),
            end: NaiveDate::from_ymd_opt(2018, 10, 28).expect("valid date"),
        }
    }

    pub fn start(&self) -> NaiveDate {
        self.start
    }

    pub fn end(&self) -> NaiveDate {
        self.end
    }

    pub fn contains(&self, at: DateTime<Utc>) -> bool {
        let day = at.date_naive();
        self.start <= day && day <= self.end
    }
}

/// Keeps ads first seen inside `period`.
pub fn filter_period(store: &AdStore, period: &PeriodFilter) -> AdStore {
    store.filter(|r| period.contains(r.first_seen))
}

/// A labeled example: the ad plus its gold label and who assigned it.
/// Serialized as the ad's fields with `label` (and `annotator`) added.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledAd {
    #[serde(flatten)]
    pub ad: AdRecord,
    pub label: crate::eval::Label,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotator: Option<String>,
}

/// Reads labeled JSONL. Unlike [`ingest`], any bad line is fatal: a gold
/// standard with silent holes would skew every metric computed from it.
pub fn read_labeled<R: BufRead>(reader: R) -> Result<Vec<LabeledAd>, CorpusError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: LabeledAd = serde_json::from_str(&line)
            .map_err(|e| CorpusError::Invalid(format!("line {}: {e}", i + 1)))?;
        rec.ad
            .validate()
            .map_err(|e| CorpusError::Invalid(format!("line {}: {e}", i + 1)))?;
        out.push(rec);
    }
    Ok(out)
}

pub fn write_labeled<W: Write>(items: &[LabeledAd], mut out: W) -> Result<(), CorpusError> {
    for item in items {
        serde_json::to_writer(&mut out, item)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{Duration, TimeZone};
    use proptest::prelude::*;

    fn ts(y: i32, m: u32, d: u32) -> DateTime<Utc> {
        Utc.with_ymd_and_hms(y, m, d, 12, 0, 0).unwrap()
    }

    fn ad(id: &str, text: &str, first: DateTime<Utc>) -> AdRecord {
        AdRecord {
            id: id.into(),
            advertiser_id: "adv".into(),
            advertiser_name: "Advertiser".into(),
            text: text.into(),
            disclaimer: None,
            landing_url: None,
            first_seen: first,
            last_seen: first,
            language: Some("pt".into()),
            source: AdSource::Collector,
            declared_political: false,
            media_refs: vec![],
        }
    }

    fn line(r: &AdRecord) -> String {
        serde_json::to_string(r).unwrap()
    }

    #[test]
    fn ingest_empty() {
        let got = ingest("".as_bytes()).unwrap();
        assert_eq!(got.store.len(), 0);
        assert_eq!(got.skipped(), 0);
    }

    #[test]
    fn ingest_last_write_wins() {
        let a1 = ad("a", "primeiro", ts(2018, 9, 1));
        let b = ad("b", "outro", ts(2018, 9, 2));
        let a2 = ad("a", "segundo", ts(2018, 9, 3));
        let src = format!("{}\n{}\n{}\n", line(&a1), line(&b), line(&a2));
        let got = ingest(src.as_bytes()).unwrap();
        assert_eq!(got.store.len(), 2);
        assert_eq!(got.store.get("a").unwrap().text, "segundo");
        assert_eq!(got.store.ids().collect::<Vec<_>>(), vec!["a", "b"]);
    }

    #[test]
    fn ingest_skips_malformed() {
        let src = format!("{}\n{{not json\n", line(&ad("a", "x", ts(2018, 9, 1))));
        let got = ingest(src.as_bytes()).unwrap();
        assert_eq!(got.store.len(), 1);
        assert_eq!(got.skipped(), 1);
        assert_eq!(got.errors[0].line, 2);
        assert_eq!(got.store.provenance.rows, 2);
    }

    #[test]
    fn ingest_rejects_invariant_violations() {
        let mut bad_order = ad("a", "x", ts(2018, 9, 2));
        bad_order.last_seen = ts(2018, 9, 1);
        let mut undeclared = ad("b", "y", ts(2018, 9, 2));
        undeclared.source = AdSource::AdLibrary;
        let empty_id = ad("", "z", ts(2018, 9, 2));
        let src = [bad_order, undeclared, empty_id]
            .iter()
            .map(line)
            .collect::<Vec<_>>()
            .join("\n");
        let got = ingest(src.as_bytes()).unwrap();
        assert_eq!(got.store.len(), 0);
        assert_eq!(got.skipped(), 3);
    }

    #[test]
    fn ingest_ignores_unknown_fields() {
        let mut v = serde_json::to_value(ad("a", "x", ts(2018, 9, 1))).unwrap();
        v["spend_brl"] = serde_json::json!(1200);
        let got = ingest(v.to_string().as_bytes()).unwrap();
        assert_eq!(got.store.len(), 1);
    }

    #[test]
    fn jsonl_round_trip() {
        let mut r = ad("a", "Vote 2332", ts(2018, 9, 1));
        r.disclaimer = Some("Propaganda Eleitoral".into());
        r.media_refs = vec!["img1".into(), "img2".into()];
        r.last_seen = ts(2018, 9, 5);
        let store = AdStore::from_records([r, ad("b", "loja", ts(2018, 9, 2))]);
        let back = ingest(store.to_jsonl().as_slice()).unwrap().store;
        assert_eq!(back.records(), store.records());
    }

    #[test]
    fn dedup_examples() {
        assert!(dedup_by_caption(&AdStore::new()).is_empty());
        let mut a = ad("a", "Mesma legenda", ts(2018, 9, 1));
        a.media_refs = vec!["img-a".into()];
        let mut b = ad("b", "  mesma   LEGENDA ", ts(2018, 9, 2));
        b.media_refs = vec!["img-b".into()];
        let out = dedup_by_caption(&AdStore::from_records([b, a]));
        assert_eq!(out.ids().collect::<Vec<_>>(), vec!["a"]);
    }

    #[test]
    fn dedup_tie_breaks_on_id() {
        let t = ts(2018, 9, 1);
        let out = dedup_by_caption(&AdStore::from_records([ad("z", "x", t), ad("m", "x", t)]));
        assert_eq!(out.ids().collect::<Vec<_>>(), vec!["m"]);
    }

    #[test]
    fn language_examples() {
        let store = AdStore::from_records([ad("1", "a", ts(2018, 9, 1)), ad("2", "b", ts(2018, 9, 1))]);
        assert_eq!(filter_language(&store, "pt"), store);

        let mut en = ad("2", "b", ts(2018, 9, 1));
        en.language = Some("en".into());
        let store = AdStore::from_records([ad("1", "a", ts(2018, 9, 1)), en, ad("3", "c", ts(2018, 9, 1))]);
        assert_eq!(filter_language(&store, "pt").len(), 2);
    }

    #[test]
    fn untagged_portuguese_is_detected() {
        // pt hits: o, e, a, para, as; es hits: para; en hits: a
        let text = "o candidato e a campanha para as eleições";
        assert_eq!(detect_language(text), Some(Language::Portuguese));
        let mut r = ad("1", text, ts(2018, 9, 1));
        r.language = None;
        assert_eq!(filter_language(&AdStore::from_records([r]), "pt").len(), 1);
    }

    #[test]
    fn detection_needs_two_hits_and_a_clear_winner() {
        assert_eq!(detect_language("candidato"), None);
        assert_eq!(detect_language("de"), None);
        assert_eq!(detect_language("the best deals for you"), Some(Language::English));
        assert_eq!(detect_language("los mejores precios para usted"), Some(Language::Spanish));
    }

    #[test]
    fn region_subtags_match_primary_language() {
        assert!(tag_matches("pt-BR", "pt"));
        assert!(tag_matches("PT", "pt"));
        assert!(!tag_matches("pt", "pt-BR"));
        assert!(!tag_matches("es", "pt"));
    }

    #[test]
    fn period_examples() {
        let p = PeriodFilter::brazil_2018_electoral();
        let start = Utc.with_ymd_and_hms(2018, 8, 16, 0, 0, 0).unwrap();
        assert!(p.contains(start));
        assert!(p.contains(Utc.with_ymd_and_hms(2018, 10, 28, 23, 59, 59).unwrap()));
        assert!(!p.contains(start - Duration::days(1)));
        assert!(PeriodFilter::new(p.end(), p.start()).is_err());
    }

    #[test]
    fn period_mixed_store() {
        let p = PeriodFilter::brazil_2018_electoral();
        let days = [
            ts(2018, 3, 14),
            ts(2018, 8, 15),
            ts(2018, 8, 16),
            ts(2018, 9, 1),
            ts(2018, 10, 1),
            ts(2018, 10, 28),
            ts(2018, 10, 29),
            ts(2018, 12, 1),
            ts(2017, 9, 1),
            ts(2019, 9, 1),
        ];
        let store = AdStore::from_records(
            days.iter()
                .enumerate()
                .map(|(i, &d)| ad(&i.to_string(), "x", d)),
        );
        let expected = days
            .iter()
            .filter(|d| {
                let day = d.date_naive();
                day >= p.start() && day <= p.end()
            })
            .count();
        assert_eq!(expected, 4);
        assert_eq!(filter_period(&store, &p).len(), expected);
    }

    fn arb_store() -> impl Strategy<Value = AdStore> {
        let caption = prop_oneof![Just("vote 10"), Just("Vote  10"), Just("promoção"), Just("o a e de"), Just("the and of")];
        let lang = prop_oneof![Just(None), Just(Some("pt".to_string())), Just(Some("en".to_string()))];
        proptest::collection::vec((caption, 0i64..200, lang), 0..30).prop_map(|rows| {
            AdStore::from_records(rows.into_iter().enumerate().map(|(i, (c, day, lang))| {
                let mut r = ad(&format!("id{i:03}"), c, ts(2018, 6, 1) + Duration::days(day));
                r.language = lang;
                r
            }))
        })
    }

    proptest! {
        #[test]
        fn dedup_is_idempotent_and_shrinking(store in arb_store()) {
            let once = dedup_by_caption(&store);
            prop_assert!(once.len() <= store.len());
            prop_assert_eq!(dedup_by_caption(&once), once.clone());
            for r in once.iter() {
                let key = normalize_text(&r.text);
                prop_assert!(!store.iter().any(|o| normalize_text(&o.text) == key
                    && (o.first_seen, &o.id) < (r.first_seen, &r.id)));
            }
        }

        #[test]
        fn filters_commute(store in arb_store()) {
            let p = PeriodFilter::brazil_2018_electoral();
            let a = filter_period(&filter_language(&store, "pt"), &p);
            let b = filter_language(&filter_period(&store, &p), "pt");
            prop_assert_eq!(a, b);
        }

        #[test]
        fn round_trip_any_store(store in arb_store()) {
            let back = ingest(store.to_jsonl().as_slice()).unwrap();
            prop_assert_eq!(back.store.records(), store.records());
        }
    }
}
