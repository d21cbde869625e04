use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use adwatch::audit::{
    calibrate_threshold, coverage_stats, probe_estimate, run_audit, AuditOptions, CalibratedThreshold, CrawlSnapshot,
    FlagJournal,
};
use adwatch::corpus::{dedup_by_caption, filter_language, filter_period, ingest, read_labeled, AdStore, LabeledAd};
use adwatch::eval::{cohen_kappa, cross_validate, parse_scores_csv, roc_curve, scores_to_csv, ABOVE_ONE};
use adwatch::models::save_model;
use adwatch::pipeline::{train_classifier, ModelSpec};
use adwatch::synth::{generate, SynthConfig};
use adwatch::textproc::{load_embeddings, tokenize, EmbeddingTable};
use adwatch::{Classifier, Label, PeriodFilter};
use adwatch_service::{load_classifier, LabelJournal, ServiceConfig};
use anyhow::{bail, Context};
use serde::Serialize;
use serde_json::json;

use crate::args::{Cli, Command, LoadModelArgs, ModelArgs, PeriodArgs, ThresholdArgs};

/// Bad arguments (exit 1) versus bad or unreadable data (exit 2).
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Data(e)
    }
}

type CliResult = Result<(), CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

struct Ctx {
    data_dir: PathBuf,
    json: bool,
}

impl Ctx {
    fn path(&self, given: &Option<PathBuf>, default_name: &str) -> PathBuf {
        given.clone().unwrap_or_else(|| self.data_dir.join(default_name))
    }

    /// Like `path`, but the data-dir default only counts when the file exists.
    fn optional_path(&self, given: Option<PathBuf>, default_name: &str) -> Option<PathBuf> {
        given.or_else(|| Some(self.data_dir.join(default_name)).filter(|p| p.is_file()))
    }

    /// Pretty JSON with `--json`, otherwise the human rendering.
    fn emit<T: Serialize>(&self, value: &T, human: impl FnOnce() -> String) -> anyhow::Result<()> {
        if self.json {
            println!("{}", to_json(value));
        } else {
            print!("{}", human());
        }
        Ok(())
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("output types serialize")
}

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> anyhow::Result<()> {
    std::fs::write(path, bytes).with_context(|| format!("cannot write {}", path.display()))
}

/// Refuses to write over an input file.
fn distinct(input: &Path, output: &Path) -> CliResult {
    let same = match (input.canonicalize(), output.canonicalize()) {
        (Ok(a), Ok(b)) => a == b,
        _ => input == output,
    };
    if same {
        return Err(usage(format!("output {} would overwrite the input", output.display())));
    }
    Ok(())
}

fn read_store(path: &Path) -> anyhow::Result<(AdStore, usize)> {
    let file = std::fs::File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let ingested = ingest(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))?;
    let skipped = ingested.skipped();
    if skipped > 0 {
        eprintln!("warning: {}: skipped {skipped} malformed lines", path.display());
    }
    Ok((ingested.store, skipped))
}

fn read_labeled_file(path: &Path) -> anyhow::Result<Vec<LabeledAd>> {
    let file = std::fs::File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    read_labeled(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))
}

fn read_embeddings(path: &Path) -> anyhow::Result<Arc<EmbeddingTable>> {
    let file = std::fs::File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let loaded = load_embeddings(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))?;
    if loaded.skipped > 0 {
        eprintln!("warning: {}: skipped {} malformed lines", path.display(), loaded.skipped);
    }
    Ok(Arc::new(loaded.table))
}

fn period(args: &PeriodArgs) -> Result<Option<PeriodFilter>, CliError> {
    if args.electoral_period {
        return Ok(Some(PeriodFilter::brazil_2018_electoral()));
    }
    match (args.from, args.to) {
        (Some(from), Some(to)) => PeriodFilter::new(from, to).map(Some).map_err(|e| usage(e.to_string())),
        _ => Ok(None),
    }
}

fn threshold(args: &ThresholdArgs) -> Result<Option<f64>, CliError> {
    let t = match (&args.threshold, &args.calibration) {
        (Some(t), _) => *t,
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("cannot open {}", path.display()))?;
            let cal: CalibratedThreshold =
                serde_json::from_str(&text).with_context(|| format!("reading {}", path.display()))?;
            cal.threshold
        }
        (None, None) => return Ok(None),
    };
    if !(0.0..=ABOVE_ONE).contains(&t) {
        return Err(usage(format!("threshold {t} outside [0, 1]")));
    }
    Ok(Some(t))
}

fn spec(args: &ModelArgs, seed: u64) -> Result<ModelSpec, CliError> {
    let mut spec = ModelSpec::defaults(args.model).with_seed(seed);
    if let Some(e) = args.epochs {
        spec.train.epochs = e;
    }
    if let Some(lr) = args.lr {
        spec.train.lr = lr;
    }
    spec.train.validate().map_err(|e| usage(e.to_string()))?;
    Ok(spec)
}

struct Training {
    spec: ModelSpec,
    labeled: Vec<LabeledAd>,
    embeddings: Option<Arc<EmbeddingTable>>,
}

fn training_inputs(ctx: &Ctx, args: &ModelArgs, seed: u64) -> Result<Training, CliError> {
    let spec = spec(args, seed)?;
    let labeled = read_labeled_file(&ctx.path(&args.labeled, "labeled.jsonl"))?;
    if labeled.is_empty() {
        return Err(CliError::Data(anyhow::anyhow!("labeled file is empty")));
    }
    let embeddings = if spec.needs_embeddings() {
        Some(read_embeddings(&ctx.path(&args.embeddings, "embeddings.txt"))?)
    } else {
        None
    };
    Ok(Training {
        spec,
        labeled,
        embeddings,
    })
}

fn classifier(ctx: &Ctx, args: &LoadModelArgs) -> anyhow::Result<Classifier> {
    let emb = ctx.path(&args.embeddings, "embeddings.txt");
    Ok(load_classifier(&args.model, Some(&emb))?)
}

fn model_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "model".into())
}

pub fn run(cli: Cli) -> CliResult {
    let ctx = Ctx {
        data_dir: cli.data_dir,
        json: cli.json,
    };
    match cli.command {
        Command::Ingest { input, output } => {
            if let Some(out) = &output {
                distinct(&input, out)?;
            }
            let file = std::fs::File::open(&input).with_context(|| format!("cannot open {}", input.display()))?;
            let ingested = ingest(BufReader::new(file)).with_context(|| format!("reading {}", input.display()))?;
            if let Some(out) = &output {
                write_file(out, ingested.store.to_jsonl())?;
            }
            let rows = ingested.store.provenance.rows;
            let report = json!({
                "rows": rows,
                "accepted": ingested.store.len(),
                "skipped": ingested.skipped(),
                "errors": ingested.errors,
            });
            ctx.emit(&report, || {
                let mut s = format!(
                    "rows {rows}, accepted {}, skipped {}\n",
                    ingested.store.len(),
                    ingested.skipped()
                );
                for e in ingested.errors.iter().take(20) {
                    let _ = writeln!(s, "  line {}: {}", e.line, e.message);
                }
                s
            })?;
            if rows > 0 && ingested.store.is_empty() {
                return Err(CliError::Data(anyhow::anyhow!("no valid ads in {}", input.display())));
            }
        }

        Command::GenSynthetic {
            seed,
            out,
            labeled,
            corpus_rows,
            declared_only,
        } => {
            let mut cfg = SynthConfig {
                seed,
                ..SynthConfig::default()
            };
            if let Some(n) = labeled {
                cfg.labeled = n;
            }
            if let Some(n) = corpus_rows {
                cfg.corpus_rows = n;
            }
            if let Some(n) = declared_only {
                cfg.declared_only = n;
            }
            let dir = out.unwrap_or_else(|| ctx.data_dir.clone());
            let corpus = generate(&cfg);
            corpus.write_to(&dir).with_context(|| format!("writing {}", dir.display()))?;
            let summary = corpus.summary();
            ctx.emit(&summary, || {
                format!(
                    "wrote {}: {} labeled ({} political), {} corpus rows, {} survivors after filters, {} declared\n",
                    dir.display(),
                    summary.labeled,
                    summary.labeled_political,
                    summary.corpus_rows,
                    summary.survivors,
                    summary.declared
                )
            })?;
        }

        Command::Dedup { input, output } => {
            distinct(&input, &output)?;
            let (store, _) = read_store(&input)?;
            let kept = dedup_by_caption(&store);
            write_file(&output, kept.to_jsonl())?;
            let report = json!({ "input": store.len(), "kept": kept.len(), "removed": store.len() - kept.len() });
            ctx.emit(&report, || {
                format!("{} ads, {} kept, {} duplicates removed\n", store.len(), kept.len(), store.len() - kept.len())
            })?;
        }

        Command::Filter {
            input,
            output,
            language,
            period: p,
        } => {
            distinct(&input, &output)?;
            let period = period(&p)?;
            let (store, _) = read_store(&input)?;
            let by_lang = match &language {
                Some(l) => filter_language(&store, l),
                None => store.clone(),
            };
            let kept = match &period {
                Some(p) => filter_period(&by_lang, p),
                None => by_lang.clone(),
            };
            write_file(&output, kept.to_jsonl())?;
            let report = json!({ "input": store.len(), "after_language": by_lang.len(), "after_period": kept.len() });
            ctx.emit(&report, || {
                format!("{} ads, {} after language, {} after period\n", store.len(), by_lang.len(), kept.len())
            })?;
        }

        Command::Train { model, seed, output } => {
            let t = training_inputs(&ctx, &model, seed)?;
            let texts: Vec<&str> = t.labeled.iter().map(|l| l.ad.text.as_str()).collect();
            let labels: Vec<Label> = t.labeled.iter().map(|l| l.label).collect();
            let clf = train_classifier(&t.spec, &texts, &labels, t.embeddings).context("training failed")?;
            let bytes = save_model(clf.model());
            write_file(&output, &bytes)?;
            let report = json!({
                "model": model.model,
                "examples": labels.len(),
                "output": output,
                "bytes": bytes.len(),
            });
            ctx.emit(&report, || {
                format!("trained {} on {} examples -> {}\n", model.model, labels.len(), output.display())
            })?;
        }

        Command::Evaluate {
            model,
            seed,
            folds,
            output,
            scores_out,
            roc_out,
        } => {
            if folds < 2 {
                return Err(usage("--folds must be at least 2"));
            }
            let t = training_inputs(&ctx, &model, seed)?;
            let tokens: Vec<_> = t.labeled.iter().map(|l| tokenize(&l.ad.text)).collect();
            let labels: Vec<Label> = t.labeled.iter().map(|l| l.label).collect();
            let outcome = cross_validate(&tokens, &labels, &t.spec, t.embeddings.as_deref(), folds, seed)
                .context("cross validation failed")?;
            let report = &outcome.report;
            if let Some(p) = &output {
                write_file(p, to_json(report) + "\n")?;
            }
            if let Some(p) = &scores_out {
                write_file(p, scores_to_csv(&labels, &outcome.oof_scores))?;
            }
            if let Some(p) = &roc_out {
                let curve = roc_curve(&outcome.oof_scores, &labels).context("roc")?;
                write_file(p, curve.to_csv())?;
            }
            ctx.emit(report, || {
                let mut s = format!(
                    "{} {}-fold cv, seed {}, {} examples\n{:<28} {:>8} {:>8} {:>8}\n",
                    report.model, report.k, report.seed, report.examples, "metric", "mean", "std", "ci90"
                );
                for (name, m) in &report.summary {
                    let _ = writeln!(s, "{name:<28} {:>8.4} {:>8.4} {:>8.4}", m.mean, m.std, m.ci90_half_width);
                }
                s
            })?;
        }

        Command::Calibrate {
            scores,
            target_fpr,
            output,
        } => {
            if !(target_fpr > 0.0 && target_fpr < 1.0) {
                return Err(usage(format!("--target-fpr {target_fpr} must be in (0, 1)")));
            }
            let text = std::fs::read_to_string(&scores).with_context(|| format!("cannot open {}", scores.display()))?;
            let (labels, s) = parse_scores_csv(&text).with_context(|| format!("reading {}", scores.display()))?;
            let cal = calibrate_threshold(&s, &labels, target_fpr).context("calibration failed")?;
            if let Some(p) = &output {
                write_file(p, to_json(&cal) + "\n")?;
            }
            ctx.emit(&cal, || {
                format!(
                    "threshold {}\nfpr {:.4} (target {}), tpr {:.4}, {} negatives, {} positives\n",
                    cal.threshold, cal.achieved_fpr, cal.target_fpr, cal.achieved_tpr, cal.negatives, cal.positives
                )
            })?;
        }

        Command::Score {
            model,
            text,
            input,
            threshold,
        } => {
            if text.is_empty() && input.is_none() {
                return Err(usage("give --text or --input"));
            }
            let threshold = self::threshold(&ThresholdArgs {
                threshold,
                calibration: None,
            })?;
            let clf = classifier(&ctx, &model)?;
            let (ids, texts): (Vec<Option<String>>, Vec<String>) = match &input {
                Some(p) => read_store(p)?.0.iter().map(|r| (Some(r.id.clone()), r.text.clone())).unzip(),
                None => text.iter().map(|t| (None, t.clone())).unzip(),
            };
            let scores = clf.score_texts(&texts).context("scoring failed")?;
            let items: Vec<_> = ids
                .iter()
                .zip(&texts)
                .zip(&scores)
                .map(|((id, text), &p)| {
                    let mut v = json!({ "probability": p });
                    match id {
                        Some(id) => v["id"] = json!(id),
                        None => v["text"] = json!(text),
                    }
                    if let Some(t) = threshold {
                        v["flagged"] = json!(p >= t);
                    }
                    v
                })
                .collect();
            ctx.emit(&items, || {
                let mut s = String::new();
                for ((id, text), p) in ids.iter().zip(&texts).zip(&scores) {
                    let key = id.clone().unwrap_or_else(|| text.chars().take(60).collect());
                    let mark = threshold.map_or("", |t| if *p >= t { "\tFLAG" } else { "" });
                    let _ = writeln!(s, "{p:.6}\t{key}{mark}");
                }
                s
            })?;
        }

        Command::Audit {
            model,
            corpus,
            declared,
            threshold: th,
            language,
            period: p,
            dedup,
            strict_cnpj,
            model_id: id,
            flags_journal,
            output,
        } => {
            let threshold = threshold(&th)?.ok_or_else(|| usage("give --threshold or --calibration"))?;
            let period = period(&p)?;
            let clf = classifier(&ctx, &model)?;
            let (corpus, _) = read_store(&ctx.path(&corpus, "corpus.jsonl"))?;
            let (declared, _) = read_store(&ctx.path(&declared, "declared.jsonl"))?;
            let opts = AuditOptions {
                model_id: id.unwrap_or_else(|| model_id(&model.model)),
                threshold,
                language,
                period,
                dedup,
                strict_cnpj,
            };
            let report = run_audit(&clf, &corpus, &declared, &opts).context("audit failed")?;
            if let Some(p) = &output {
                write_file(p, to_json(&report) + "\n")?;
            }
            let added = match &flags_journal {
                Some(path) => {
                    let mut j = FlagJournal::open(path).with_context(|| format!("opening {}", path.display()))?;
                    Some(j.create_flags(&report.flags).context("writing flags")?)
                }
                None => None,
            };
            ctx.emit(&report, || {
                let c = &report.corpus;
                let mut s = format!(
                    "corpus {} -> language {} -> period {} -> dedup {}\n\
                     threshold {} flagged {}, matched to declared {}, compliant {} ({} advertisers)\n",
                    c.input,
                    c.after_language,
                    c.after_period,
                    c.after_dedup,
                    report.threshold,
                    report.flagged_count,
                    report.matched_declared.len(),
                    report.compliance.compliant,
                    report.compliance.compliant_advertisers,
                );
                if let Some(n) = added {
                    let _ = writeln!(s, "{n} new flags journaled");
                }
                let _ = writeln!(s, "{:<12} {:<32} {:>7} {:>7} {:>9}", "advertiser", "name", "flagged", "matched", "compliant");
                for a in report.advertisers.iter().take(15) {
                    let _ = writeln!(
                        s,
                        "{:<12} {:<32} {:>7} {:>7} {:>9}",
                        a.advertiser_id, a.advertiser_name, a.flagged, a.matched_declared, a.compliant
                    );
                }
                if report.advertisers.len() > 15 {
                    let _ = writeln!(s, "... {} more advertisers; use --json or -o for all", report.advertisers.len() - 15);
                }
                s
            })?;
        }

        Command::Kappa {
            journal,
            annotators,
            a,
            b,
        } => {
            let (names, la, lb, unsure) = match (journal, a, b) {
                (Some(path), _, _) => {
                    if annotators.len() != 2 || annotators[0] == annotators[1] {
                        return Err(usage("--annotators takes two distinct names, e.g. --annotators a,b"));
                    }
                    if !path.exists() {
                        return Err(CliError::Data(anyhow::anyhow!("{} does not exist", path.display())));
                    }
                    let j = LabelJournal::open(&path).with_context(|| format!("reading {}", path.display()))?;
                    let (_, la, lb, unsure) = j.paired(&annotators[0], &annotators[1]);
                    (annotators.clone(), la, lb, unsure)
                }
                (None, Some(a), Some(b)) => {
                    let la: BTreeMap<String, Label> =
                        read_labeled_file(&a)?.into_iter().map(|l| (l.ad.id, l.label)).collect();
                    let lb: BTreeMap<String, Label> =
                        read_labeled_file(&b)?.into_iter().map(|l| (l.ad.id, l.label)).collect();
                    let (x, y): (Vec<Label>, Vec<Label>) =
                        la.iter().filter_map(|(id, l)| lb.get(id).map(|m| (*l, *m))).unzip();
                    (vec![a.display().to_string(), b.display().to_string()], x, y, 0)
                }
                _ => return Err(usage("give --journal with --annotators, or --a and --b")),
            };
            let report = cohen_kappa(&la, &lb).context("no shared decisive labels")?;
            let out = json!({ "annotators": names, "unsure_skipped": unsure, "report": report });
            ctx.emit(&out, || {
                format!(
                    "{} items, agreement {:.1}%, kappa {:.4} ({})\n",
                    report.items, report.agreement_pct, report.kappa, report.landis_koch_band
                )
            })?;
        }

        Command::Coverage { snapshots, base, probe } => {
            if snapshots.is_none() && base.is_none() {
                return Err(usage("give --snapshots or --base with --probe"));
            }
            let mut out = serde_json::Map::new();
            let mut human = String::new();
            if let Some(path) = &snapshots {
                let text = std::fs::read_to_string(path).with_context(|| format!("cannot open {}", path.display()))?;
                let snaps = text
                    .lines()
                    .enumerate()
                    .filter(|(_, l)| !l.trim().is_empty())
                    .map(|(i, l)| {
                        serde_json::from_str::<CrawlSnapshot>(l).with_context(|| format!("{} line {}", path.display(), i + 1))
                    })
                    .collect::<anyhow::Result<Vec<_>>>()?;
                let stats = coverage_stats(&snaps).context("coverage")?;
                let _ = writeln!(
                    human,
                    "cumulative {:?}, mean growth {:.2}%",
                    stats.cumulative,
                    stats.mean_growth * 100.0
                );
                out.insert("coverage".into(), json!(stats));
            }
            if let Some(base) = &base {
                let base_ids = read_ids(base)?;
                let probes = probe.iter().map(|p| read_ids(p)).collect::<anyhow::Result<Vec<_>>>()?;
                let est = probe_estimate(&base_ids, &probes).context("probe estimate")?;
                let _ = writeln!(
                    human,
                    "{} new ids over {} probes: {:.2}% of base, {:.4}% per probe",
                    est.new_ids,
                    est.probes,
                    est.total_fraction * 100.0,
                    est.per_probe_fraction * 100.0
                );
                out.insert("probes".into(), json!(est));
            }
            ctx.emit(&out, || human)?;
        }

        Command::Serve {
            addr,
            corpus,
            declared,
            model,
            embeddings,
            threshold: th,
            flags_journal,
            labels_journal,
            metrics,
            scores,
        } => {
            let threshold = threshold(&th)?;
            let embeddings = model.as_ref().map(|_| ctx.path(&embeddings, "embeddings.txt"));
            let config = ServiceConfig {
                corpus: ctx.optional_path(corpus, "corpus.jsonl"),
                declared: ctx.optional_path(declared, "declared.jsonl"),
                model,
                embeddings,
                threshold,
                flags_journal,
                labels_journal,
                metrics,
                scores,
            };
            let state = adwatch_service::load_state(&config).map_err(anyhow::Error::from)?;
            let rt = tokio::runtime::Runtime::new().context("starting runtime")?;
            eprintln!("listening on http://{addr}");
            rt.block_on(adwatch_service::serve(state, addr)).map_err(anyhow::Error::from)?;
        }
    }
    Ok(())
}

fn read_ids(path: &Path) -> anyhow::Result<HashSet<String>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot open {}", path.display()))?;
    if text.trim().is_empty() {
        bail!("{} has no ids", path.display());
    }
    Ok(text.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect())
}
