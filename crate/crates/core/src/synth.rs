//! Seeded synthetic fixtures with known ground truth: a labeled training
//! set, an unlabeled collector corpus with planted political ads and caption
//! duplicates, a declared-ad corpus, and matching word embeddings.
//!
//! Truth is tracked by construction while generating, never by running the
//! library's own filters, so tests can use it as an independent oracle.

use std::collections::{HashMap, HashSet};
use std::io::Write;
use std::path::Path;

use chrono::{DateTime, Duration, NaiveDate, TimeZone, Utc};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::audit::normalize_text;
use crate::corpus::{write_labeled, AdRecord, AdSource, AdStore, CorpusError, LabeledAd, PeriodFilter};
use crate::eval::Label;
use crate::textproc::{write_embeddings, EmbeddingTable, URL_TOKEN};

const POLITICAL: &[&str] = &[
    "eleição", "eleições", "candidato", "candidata", "vote", "votar", "voto", "deputado", "deputada",
    "senador", "senadora", "governador", "governadora", "presidente", "federal", "estadual", "partido",
    "campanha", "urna", "proposta", "propostas", "mandato", "democracia", "cidadania", "congresso",
    "assembleia", "política", "político", "reforma", "corrupção", "segurança", "educação", "eleitor",
    "eleitores", "coligação", "chapa", "confirme", "debate", "governo", "compromisso", "mudança",
    "trabalhador", "legislativo", "justiça", "direitos", "ficha", "limpa", "plenário", "bancada",
    "votação", "turno", "segundo", "primeiro", "apoie", "militância", "prefeitura", "ministério",
    "constituição", "impostos", "saúde",
];

const COMMERCIAL: &[&str] = &[
    "promoção", "desconto", "oferta", "compre", "loja", "frete", "grátis", "parcelas", "produto",
    "produtos", "liquidação", "cupom", "preço", "imperdível", "coleção", "moda", "sapatos", "vestido",
    "celular", "smartphone", "curso", "matrícula", "aproveite", "estoque", "entrega", "cartão",
    "assinatura", "academia", "restaurante", "pizza", "delivery", "viagem", "hotel", "pacote",
    "seguro", "carro", "apartamento", "imóvel", "lançamento", "beleza", "maquiagem", "perfume",
    "clínica", "consulta", "encomende", "tamanhos", "sabores", "cardápio", "garantia", "unidades",
    "vendas", "queima", "novidades", "outlet", "marca", "look", "tênis", "bolsa", "compras",
    "parcele",
];

const NEUTRAL: &[&str] = &[
    "hoje", "agora", "dia", "semana", "novo", "nova", "melhor", "grande", "tempo", "cidade",
    "família", "vida", "juntos", "conheça", "acesse", "saiba", "link", "confira", "todos", "gente",
    "ano", "casa", "trabalho", "sempre", "aqui", "site", "bio", "clique", "venha", "participe",
    "amigos", "momento", "história", "equipe", "especial", "oportunidade", "qualidade", "região",
    "comunidade", "jovens", "mulheres", "brasil", "futuro", "plano", "programa", "juntas", "feliz",
    "obrigado", "informações", "detalhes",
];

/// Portuguese stopwords absent from the English and Spanish lists, so
/// untagged captions are detected as Portuguese.
const PT_FILLER: &[&str] = &[
    "você", "não", "com", "do", "da", "na", "nosso", "nossa", "são", "pelo", "pela", "seu", "sua",
    "mais", "uma", "também",
];

const EN_WORDS: &[&str] = &[
    "sale", "shop", "free", "shipping", "new", "collection", "today", "order", "online", "deal",
    "best", "price", "store", "discount", "limited", "offer", "quality", "brand", "style", "week",
];
const EN_FILLER: &[&str] = &["the", "and", "with", "your", "our", "this", "you", "will", "from", "have", "just"];

const ES_WORDS: &[&str] = &[
    "oferta", "tienda", "envío", "gratis", "nueva", "colección", "hoy", "pedido", "descuento",
    "precio", "calidad", "marca", "estilo", "semana", "compra", "regalo", "ahora", "mejor",
];
const ES_FILLER: &[&str] = &["el", "los", "las", "del", "y", "muy", "hay", "usted", "nuestro", "porque", "sobre", "desde"];

const POLITICAL_TAGS: &[&str] = &["#eleicoes2018", "#elenao", "#elesim", "#vote", "#brasil2018"];
const COMMERCIAL_TAGS: &[&str] = &["#promo", "#blackfriday", "#oferta", "#moda", "#frete"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub seed: u64,
    pub labeled: usize,
    /// Collector corpus rows, duplicates included.
    pub corpus_rows: usize,
    /// Share of distinct captions that are political.
    pub political_rate: f64,
    /// Share of corpus rows that are extra copies of another row's caption.
    pub duplicate_rate: f64,
    pub out_of_period_rate: f64,
    pub foreign_rate: f64,
    /// Share of ads without a language tag.
    pub untagged_rate: f64,
    /// Declared ads with captions of their own.
    pub declared_only: usize,
    /// Share of planted political captions also present in the declared corpus.
    pub declared_match_rate: f64,
    /// Share of planted political captions with a complete disclaimer.
    pub disclaimer_rate: f64,
    /// Chance an ad carries one word from the other class's vocabulary.
    pub cross_topic_rate: f64,
    /// Chance an ad is hard: a single topic word and one from the other class.
    pub hard_rate: f64,
    pub embed_dim: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 2018,
            labeled: 2000,
            corpus_rows: 40_000,
            political_rate: 0.02,
            duplicate_rate: 0.10,
            out_of_period_rate: 0.04,
            foreign_rate: 0.03,
            untagged_rate: 0.3,
            declared_only: 3000,
            declared_match_rate: 0.05,
            disclaimer_rate: 0.10,
            cross_topic_rate: 0.15,
            hard_rate: 0.04,
            embed_dim: 32,
        }
    }
}

/// Ground truth for one collector row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthRow {
    pub id: String,
    pub political: bool,
    /// Rows sharing a caption share a group.
    pub group: usize,
    /// Portuguese and first seen inside the electoral period.
    pub in_scope: bool,
    /// Kept after language, period and caption dedup.
    pub survivor: bool,
    /// Declared ad this row's caption should match, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub declared_match: Option<String>,
    pub compliant: bool,
}

/// Headline counts of a generated fixture.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthSummary {
    pub seed: u64,
    pub labeled: usize,
    pub labeled_political: usize,
    pub corpus_rows: usize,
    pub political_rows: usize,
    /// Distinct captions in the corpus: what caption dedup alone keeps.
    pub caption_groups: usize,
    pub in_scope_rows: usize,
    /// What language, period and dedup together keep.
    pub survivors: usize,
    pub political_survivors: usize,
    pub survivors_with_declared_match: usize,
    pub compliant_survivors: usize,
    pub declared: usize,
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub config: SynthConfig,
    pub labeled: Vec<LabeledAd>,
    pub corpus: AdStore,
    pub declared: AdStore,
    pub truth: Vec<TruthRow>,
    pub embeddings: EmbeddingTable,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Lang {
    Pt,
    En,
    Es,
}

struct Gen {
    rng: ChaCha8Rng,
    cfg: SynthConfig,
    seen: HashSet<String>,
}

fn day(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).expect("valid date")
}

impl Gen {
    fn pick<'a>(&mut self, words: &[&'a str]) -> &'a str {
        words.choose(&mut self.rng).expect("non-empty word list")
    }

    fn caption_once(&mut self, lang: Lang, political: bool) -> String {
        let rng_words = |g: &mut Gen, list: &[&'static str], lo: usize, hi: usize| -> Vec<String> {
            let n = g.rng.gen_range(lo..=hi);
            (0..n).map(|_| g.pick(list).to_string()).collect()
        };
        let mut words: Vec<String> = match lang {
            Lang::Pt => {
                let (own, other) = if political { (POLITICAL, COMMERCIAL) } else { (COMMERCIAL, POLITICAL) };
                let hard = self.rng.gen_bool(self.cfg.hard_rate);
                let mut w = rng_words(self, own, if hard { 1 } else { 2 }, if hard { 1 } else { 5 });
                if hard || self.rng.gen_bool(self.cfg.cross_topic_rate) {
                    w.push(self.pick(other).to_string());
                }
                w.extend(rng_words(self, NEUTRAL, 6, 14));
                let mut filler: Vec<&str> = PT_FILLER.to_vec();
                filler.shuffle(&mut self.rng);
                w.extend(filler[..3].iter().map(|s| s.to_string()));
                w.extend(rng_words(self, PT_FILLER, 0, 3));
                if political && self.rng.gen_bool(0.4) {
                    let n = self.rng.gen_range(10..100) * if self.rng.gen_bool(0.5) { 1 } else { 100 };
                    w.push(format!("vote {n}"));
                }
                if !political && self.rng.gen_bool(0.4) {
                    w.push(format!("{}%", self.rng.gen_range(1..10) * 10));
                }
                let tags = if political { POLITICAL_TAGS } else { COMMERCIAL_TAGS };
                if self.rng.gen_bool(0.2) {
                    w.push(self.pick(tags).to_string());
                }
                w
            }
            Lang::En | Lang::Es => {
                let (content, filler) = if lang == Lang::En { (EN_WORDS, EN_FILLER) } else { (ES_WORDS, ES_FILLER) };
                let mut w = rng_words(self, content, 6, 12);
                let mut f: Vec<&str> = filler.to_vec();
                f.shuffle(&mut self.rng);
                w.extend(f[..3].iter().map(|s| s.to_string()));
                w
            }
        };
        words.shuffle(&mut self.rng);
        if self.rng.gen_bool(0.3) {
            words.push("https://example.com/".to_string() + &self.rng.gen_range(0..100_000).to_string());
        }
        let mut text = words.join(" ");
        if let Some(first) = text.get(..1) {
            text = first.to_uppercase() + &text[1..];
        }
        text
    }

    /// A caption whose normalized form has not been produced before.
    fn caption(&mut self, lang: Lang, political: bool) -> String {
        loop {
            let c = self.caption_once(lang, political);
            if self.seen.insert(normalize_text(&c)) {
                return c;
            }
        }
    }

    fn time_in(&mut self, from: NaiveDate, to: NaiveDate) -> DateTime<Utc> {
        let days = (to - from).num_days();
        let d = from + Duration::days(self.rng.gen_range(0..=days));
        let secs = self.rng.gen_range(0..86_400);
        Utc.from_utc_datetime(&d.and_hms_opt(0, 0, 0).expect("midnight")) + Duration::seconds(secs)
    }

    /// Changes case and spacing only, so the normalized caption is unchanged.
    fn reformat(&mut self, text: &str) -> String {
        let mut out = String::new();
        for (i, w) in text.split(' ').enumerate() {
            if i > 0 {
                out.push_str(if self.rng.gen_bool(0.1) { "  " } else { " " });
            }
            match self.rng.gen_range(0..6) {
                0 => out.push_str(&w.to_uppercase()),
                1 => out.push_str(&w.to_lowercase()),
                _ => out.push_str(w),
            }
        }
        if self.rng.gen_bool(0.2) {
            out.push('\n');
        }
        out
    }

    fn tax_id_disclaimer(&mut self) -> String {
        let d = |g: &mut Gen, n: usize| -> String { (0..n).map(|_| char::from(b'0' + g.rng.gen_range(0..10u8))).collect() };
        let keyword = ["Propaganda Eleitoral", "Propaganda Política", "PROPAGANDA ELEITORAL"][self.rng.gen_range(0..3)];
        if self.rng.gen_bool(0.5) {
            format!("{keyword} - CNPJ {}.{}.{}/{}-{}", d(self, 2), d(self, 3), d(self, 3), d(self, 4), d(self, 2))
        } else {
            format!("{keyword} - CPF {}.{}.{}-{}", d(self, 3), d(self, 3), d(self, 3), d(self, 2))
        }
    }
}

struct Base {
    text: String,
    political: bool,
    lang: Lang,
    tagged: bool,
    first_seen: DateTime<Utc>,
    advertiser: usize,
    disclaimer: Option<String>,
    compliant: bool,
}

fn advertiser(political: bool, n: usize) -> (String, String) {
    if political {
        (format!("pol-{n:04}"), format!("Candidatura {n}"))
    } else {
        (format!("biz-{n:04}"), format!("Empresa {n}"))
    }
}

fn lang_tag(lang: Lang) -> &'static str {
    match lang {
        Lang::Pt => "pt-BR",
        Lang::En => "en",
        Lang::Es => "es",
    }
}

/// Generates a complete fixture. Equal configs give identical output.
pub fn generate(cfg: &SynthConfig) -> SynthCorpus {
    let mut g = Gen {
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        cfg: cfg.clone(),
        seen: HashSet::new(),
    };
    let period = PeriodFilter::brazil_2018_electoral();
    let before = (day(2018, 5, 1), period.start() - Duration::days(1));
    let ad_base = |g: &mut Gen,
                   id: String,
                   text: String,
                   political: bool,
                   adv: usize,
                   lang: Option<&str>,
                   first_seen: DateTime<Utc>,
                   source: AdSource| {
        let (advertiser_id, advertiser_name) = advertiser(political, adv);
        let last_seen = first_seen + Duration::hours(g.rng.gen_range(0..24 * 30));
        AdRecord {
            id,
            advertiser_id,
            advertiser_name,
            text,
            disclaimer: None,
            landing_url: None,
            first_seen,
            last_seen,
            language: lang.map(str::to_string),
            source,
            declared_political: source == AdSource::AdLibrary,
            media_refs: vec![],
        }
    };

    // labeled set: Portuguese, in period, balanced
    let mut labeled = Vec::with_capacity(cfg.labeled);
    for i in 0..cfg.labeled {
        let political = i % 2 == 0;
        let text = g.caption(Lang::Pt, political);
        let at = g.time_in(period.start(), period.end());
        let adv = g.rng.gen_range(0..if political { 150 } else { 2000 });
        let tag = (!g.rng.gen_bool(cfg.untagged_rate)).then_some("pt-BR");
        let ad = ad_base(&mut g, format!("l{i:05}"), text, political, adv, tag, at, AdSource::Collector);
        labeled.push(LabeledAd {
            ad,
            label: Label::from_political(political),
            annotator: Some(["ann-a", "ann-b", "ann-c"][i % 3].to_string()),
        });
    }
    labeled.shuffle(&mut g.rng);

    // distinct captions of the collector corpus
    let copies = (cfg.corpus_rows as f64 * cfg.duplicate_rate).round() as usize;
    let n_base = cfg.corpus_rows - copies;
    let n_political = (n_base as f64 * cfg.political_rate).round() as usize;
    let mut bases: Vec<Base> = (0..n_base)
        .map(|i| {
            let political = i < n_political;
            let foreign = !political && g.rng.gen_bool(cfg.foreign_rate);
            let lang = if !foreign {
                Lang::Pt
            } else if g.rng.gen_bool(0.5) {
                Lang::En
            } else {
                Lang::Es
            };
            let first_seen = if g.rng.gen_bool(cfg.out_of_period_rate) {
                g.time_in(before.0, before.1)
            } else {
                g.time_in(period.start(), period.end())
            };
            let (disclaimer, compliant) = if political && g.rng.gen_bool(cfg.disclaimer_rate) {
                (Some(g.tax_id_disclaimer()), true)
            } else if political && g.rng.gen_bool(0.05) {
                (Some("Propaganda eleitoral".to_string()), false)
            } else {
                (None, false)
            };
            Base {
                text: g.caption(lang, political),
                political,
                lang,
                tagged: !g.rng.gen_bool(cfg.untagged_rate),
                first_seen,
                advertiser: g.rng.gen_range(0..if political { 150 } else { 2000 }),
                disclaimer,
                compliant,
            }
        })
        .collect();
    bases.shuffle(&mut g.rng);

    // rows: one per caption plus copies of random captions
    let mut rows: Vec<(usize, DateTime<Utc>, String)> = bases.iter().enumerate().map(|(i, b)| (i, b.first_seen, b.text.clone())).collect();
    for _ in 0..copies {
        let b = g.rng.gen_range(0..n_base);
        // copies can share the original's timestamp, exercising the id tie-break
        let at = bases[b].first_seen + Duration::hours(g.rng.gen_range(0..=120));
        let text = g.reformat(&bases[b].text.clone());
        rows.push((b, at, text));
    }
    rows.shuffle(&mut g.rng);

    let mut corpus = AdStore::new();
    let mut row_meta: Vec<(String, usize, bool)> = Vec::with_capacity(rows.len());
    for (i, (b, at, text)) in rows.into_iter().enumerate() {
        let base = &bases[b];
        let id = format!("c{i:06}");
        let lang = base.tagged.then(|| lang_tag(base.lang));
        let (political, adv) = (base.political, base.advertiser);
        let mut ad = ad_base(&mut g, id.clone(), text, political, adv, lang, at, AdSource::Collector);
        ad.disclaimer = bases[b].disclaimer.clone();
        ad.media_refs = vec![format!("media/{id}.jpg")];
        let in_scope = bases[b].lang == Lang::Pt && period.contains(at);
        row_meta.push((id, b, in_scope));
        corpus.insert(ad);
    }

    // survivor per caption group: earliest in-scope row, then smallest id
    let mut survivor_of: HashMap<usize, (DateTime<Utc>, String)> = HashMap::new();
    for (id, b, in_scope) in &row_meta {
        if !in_scope {
            continue;
        }
        let at = corpus.get(id).expect("inserted").first_seen;
        let cand = (at, id.clone());
        survivor_of
            .entry(*b)
            .and_modify(|cur| {
                if cand < *cur {
                    *cur = cand.clone();
                }
            })
            .or_insert(cand);
    }

    // declared corpus: copies of some political captions, then fresh ones
    let mut declared = AdStore::new();
    let mut declared_match: HashMap<usize, (DateTime<Utc>, String)> = HashMap::new();
    let mut next_declared = 0usize;
    let mut political_bases: Vec<usize> = (0..n_base).filter(|&b| bases[b].political).collect();
    political_bases.shuffle(&mut g.rng);
    let n_match = (political_bases.len() as f64 * cfg.declared_match_rate).round() as usize;
    for &b in &political_bases[..n_match] {
        // sometimes declared twice, so the earliest-wins rule matters
        let n = if g.rng.gen_bool(0.3) { 2 } else { 1 };
        for _ in 0..n {
            let id = format!("d{next_declared:06}");
            next_declared += 1;
            let at = g.time_in(period.start(), period.end());
            let text = g.reformat(&bases[b].text.clone());
            let (political, adv) = (bases[b].political, bases[b].advertiser);
            let mut ad = ad_base(&mut g, id.clone(), text, political, adv, Some("pt-BR"), at, AdSource::AdLibrary);
            ad.disclaimer = bases[b].disclaimer.clone();
            let cand = (at, id);
            declared_match
                .entry(b)
                .and_modify(|cur| {
                    if cand < *cur {
                        *cur = cand.clone();
                    }
                })
                .or_insert(cand);
            declared.insert(ad);
        }
    }
    for _ in 0..cfg.declared_only {
        let id = format!("d{next_declared:06}");
        next_declared += 1;
        let text = g.caption(Lang::Pt, true);
        let at = g.time_in(period.start(), period.end());
        let adv = g.rng.gen_range(0..150);
        let mut ad = ad_base(&mut g, id, text, true, adv, Some("pt-BR"), at, AdSource::AdLibrary);
        ad.disclaimer = Some(g.tax_id_disclaimer());
        declared.insert(ad);
    }

    let truth = row_meta
        .iter()
        .map(|(id, b, in_scope)| {
            let survivor = survivor_of.get(b).is_some_and(|(_, s)| s == id);
            TruthRow {
                id: id.clone(),
                political: bases[*b].political,
                group: *b,
                in_scope: *in_scope,
                survivor,
                declared_match: declared_match.get(b).map(|(_, d)| d.clone()),
                compliant: bases[*b].compliant,
            }
        })
        .collect();

    SynthCorpus {
        config: cfg.clone(),
        labeled,
        corpus,
        declared,
        truth,
        embeddings: synthetic_embeddings(cfg.embed_dim, cfg.seed),
    }
}

/// Word vectors where each topic's words cluster around their own centre
/// and everything else is noise around the origin.
pub fn synthetic_embeddings(dim: usize, seed: u64) -> EmbeddingTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_e3b0);
    let unit = Normal::new(0.0, 1.0).expect("valid normal");
    let noise = Normal::new(0.0, 0.35).expect("valid normal");
    let centre = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        let v: Vec<f64> = (0..dim).map(|_| unit.sample(rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter().map(|x| 2.0 * x / norm).collect()
    };
    let political = centre(&mut rng);
    let commercial = centre(&mut rng);
    let mut table = EmbeddingTable::new(dim).expect("dim > 0");
    let groups: [(&[&str], Option<&Vec<f64>>); 9] = [
        (POLITICAL, Some(&political)),
        (POLITICAL_TAGS, Some(&political)),
        (COMMERCIAL, Some(&commercial)),
        (COMMERCIAL_TAGS, Some(&commercial)),
        (NEUTRAL, None),
        (PT_FILLER, None),
        (EN_WORDS, None),
        (EN_FILLER, None),
        (ES_WORDS, None),
    ];
    let extra: [&str; 2] = [URL_TOKEN, "vote"];
    for (words, c) in groups.iter().chain([(ES_FILLER, None), (&extra[..], None)].iter()) {
        for w in words.iter() {
            if table.get(w).is_some() {
                continue;
            }
            let v: Vec<f64> = (0..dim)
                .map(|j| c.map_or(0.0, |c| c[j]) + noise.sample(&mut rng))
                .collect();
            table.insert(*w, v).expect("dims agree");
        }
    }
    table
}

impl SynthCorpus {
    pub fn summary(&self) -> SynthSummary {
        let survivors: Vec<&TruthRow> = self.truth.iter().filter(|t| t.survivor).collect();
        SynthSummary {
            seed: self.config.seed,
            labeled: self.labeled.len(),
            labeled_political: self.labeled.iter().filter(|l| l.label.is_political()).count(),
            corpus_rows: self.truth.len(),
            political_rows: self.truth.iter().filter(|t| t.political).count(),
            caption_groups: self.truth.iter().map(|t| t.group).collect::<HashSet<_>>().len(),
            in_scope_rows: self.truth.iter().filter(|t| t.in_scope).count(),
            survivors: survivors.len(),
            political_survivors: survivors.iter().filter(|t| t.political).count(),
            survivors_with_declared_match: survivors.iter().filter(|t| t.declared_match.is_some()).count(),
            compliant_survivors: survivors.iter().filter(|t| t.compliant).count(),
            declared: self.declared.len(),
        }
    }

    /// Writes `labeled.jsonl`, `corpus.jsonl`, `declared.jsonl`,
    /// `embeddings.txt`, `truth.jsonl` and `summary.json` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<(), CorpusError> {
        std::fs::create_dir_all(dir)?;
        let create = |name: &str| -> Result<std::io::BufWriter<std::fs::File>, CorpusError> {
            Ok(std::io::BufWriter::new(std::fs::File::create(dir.join(name))?))
        };
        let mut w = create("labeled.jsonl")?;
        write_labeled(&self.labeled, &mut w)?;
        w.flush()?;
        let mut w = create("corpus.jsonl")?;
        self.corpus.write_jsonl(&mut w)?;
        w.flush()?;
        let mut w = create("declared.jsonl")?;
        self.declared.write_jsonl(&mut w)?;
        w.flush()?;
        let mut w = create("embeddings.txt")?;
        write_embeddings(&self.embeddings, &mut w).map_err(|e| CorpusError::Invalid(e.to_string()))?;
        w.flush()?;
        let mut w = create("truth.jsonl")?;
        for t in &self.truth {
            serde_json::to_writer(&mut w, t)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        let mut w = create("summary.json")?;
        serde_json::to_writer_pretty(&mut w, &self.summary())?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(())
    }
}

/// `unique` distinct captions plus `copies` case/whitespace variants of
/// them. Caption dedup must keep exactly `unique` ads.
pub fn caption_duplicate_store(unique: usize, copies: usize, seed: u64) -> AdStore {
    let mut g = Gen {
        rng: ChaCha8Rng::seed_from_u64(seed),
        cfg: SynthConfig::default(),
        seen: HashSet::new(),
    };
    let t0 = Utc.with_ymd_and_hms(2018, 9, 1, 0, 0, 0).unwrap();
    let mut texts: Vec<String> = (0..unique)
        .map(|i| {
            let w1 = g.pick(NEUTRAL);
            let w2 = g.pick(COMMERCIAL);
            format!("{w1} {w2} anúncio {i}")
        })
        .collect();
    for _ in 0..copies {
        let b = g.rng.gen_range(0..unique);
        let t = g.reformat(&texts[b].clone());
        texts.push(t);
    }
    texts.shuffle(&mut g.rng);
    AdStore::from_records(texts.into_iter().enumerate().map(|(i, text)| {
        let at = t0 + Duration::minutes(g.rng.gen_range(0..60 * 24 * 30));
        AdRecord {
            id: format!("u{i:06}"),
            advertiser_id: "biz-0000".into(),
            advertiser_name: "Empresa 0".into(),
            text,
            disclaimer: None,
            landing_url: None,
            first_seen: at,
            last_seen: at,
            language: Some("pt-BR".into()),
            source: AdSource::Collector,
            declared_political: false,
            media_refs: vec![],
        }
    }))
}
