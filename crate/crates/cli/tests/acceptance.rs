//! Acceptance suite. Prints one PASS/FAIL line per criterion and fails if any
//! required criterion fails. Run alone with
//! `cargo test -p adwatch-cli --test acceptance -- --nocapture`.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use adwatch::audit::{calibrate_threshold, score_corpus};
use adwatch::corpus::dedup_by_caption;
use adwatch::eval::{auc_rank, cohen_kappa, roc_curve, CvReport};
use adwatch::models::{cnn_backward, cnn_forward, cnn_loss, train_mnb, CnnConfig, CnnModel, ForwardMode, LogRegModel};
use adwatch::pipeline::{train_classifier, ModelSpec};
use adwatch::synth::{caption_duplicate_store, TruthRow};
use adwatch::textproc::{SparseVector, TokenMatrix};
use adwatch::{Label, ModelKind};
use axum::body::Body;
use axum::http::Request;
use http_body_util::BodyExt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use tower::ServiceExt;

// Tolerances and targets.
const CNN_GRAD_REL: f64 = 1e-4;
const LOGREG_GRAD_REL: f64 = 1e-6;
const GRAD_BUDGET: Duration = Duration::from_secs(30);
const KAPPA_TOL: f64 = 1e-12;
const KAPPA_TABLES: usize = 20;
const AUC_TOL: f64 = 1e-9;
const AUC_SETS: usize = 100;
const MNB_TOL: f64 = 1e-9;
const CALIBRATION_SETS: usize = 100;
const CALIBRATION_TARGETS: [f64; 3] = [0.005, 0.01, 0.03];
const MIN_ACCURACY: f64 = 0.95;
const MIN_AUC: f64 = 0.98;
const AUDIT_TARGET_FPR: f64 = 0.01;
const MIN_AUDIT_RECALL: f64 = 0.70;
const MAX_FALSE_FLAG_RATE: f64 = 0.015;
const E2E_BUDGET: Duration = Duration::from_secs(600);
const SYNTH_SEED: u64 = 2018;
const CV_SEED: u64 = 7;
const TRAIN_SEED: u64 = 1;
const PARITY_TEXTS: usize = 100;

struct Outcome {
    name: String,
    pass: Option<bool>,
    detail: String,
}

#[derive(Default)]
struct Board(Vec<Outcome>);

/// Writes past libtest's output capture so the report shows in a plain `cargo test`.
fn report(line: &str) {
    use std::io::Write;
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "{line}");
    let _ = err.flush();
}

impl Board {
    fn check(&mut self, name: &str, pass: bool, detail: String) {
        report(&format!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" }));
        self.0.push(Outcome {
            name: name.into(),
            pass: Some(pass),
            detail,
        });
    }

    fn skip(&mut self, name: &str, detail: &str) {
        report(&format!("SKIP {name}: {detail}"));
        self.0.push(Outcome {
            name: name.into(),
            pass: None,
            detail: detail.into(),
        });
    }
}

fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

// ---------------------------------------------------------------- gradients

fn gradients(board: &mut Board) {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let cfg = CnnConfig {
        embed_dim: 4,
        filter_widths: vec![3, 4, 5],
        filters_per_width: 2,
        hidden: 3,
        dropout_p: 0.0,
    };
    let mut worst_cnn: f64 = 0.0;
    let mut checked = 0;
    for trial in 0..3u64 {
        let mut model = CnnModel::new(cfg.clone(), 17 + trial).unwrap();
        for t in model.params.tensors_mut() {
            for v in t.iter_mut() {
                *v += rng.gen_range(-0.3..0.3);
            }
        }
        for (k, label) in [Label::Political, Label::NonPolitical].into_iter().enumerate() {
            let rows: Vec<Vec<f64>> = (0..6 + k).map(|_| (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
            let x = TokenMatrix::from_rows(4, &rows).unwrap();
            let (_, cache) = cnn_forward(&model, &x, ForwardMode::Eval).unwrap();
            let (_, grads) = cnn_backward(&model, &cache, label);
            let h = 1e-6;
            for (ti, g) in grads.tensors().iter().enumerate() {
                for (pi, &analytic) in g.iter().enumerate() {
                    let mut plus = model.clone();
                    plus.params.tensors_mut()[ti][pi] += h;
                    let mut minus = model.clone();
                    minus.params.tensors_mut()[ti][pi] -= h;
                    let numeric = (cnn_loss(&plus, &x, label).unwrap() - cnn_loss(&minus, &x, label).unwrap()) / (2.0 * h);
                    worst_cnn = worst_cnn.max(rel_err(analytic, numeric, 1e-7));
                    checked += 1;
                }
            }
        }
    }

    let mut worst_lr: f64 = 0.0;
    let dim = 8;
    for _ in 0..20 {
        let xs: Vec<Vec<f64>> = (0..5).map(|_| (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
        let ls: Vec<Label> = (0..5).map(|_| Label::from_political(rng.gen())).collect();
        let mut m = LogRegModel::zeros(dim, 0.1, rng.gen_range(0.0..0.1));
        m.weights = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        m.bias = rng.gen_range(-1.0..1.0);
        let (_, gw, gb) = m.loss_and_grad(&xs, &ls);
        let h = 1e-5;
        for j in 0..=dim {
            let (mut plus, mut minus) = (m.clone(), m.clone());
            if j < dim {
                plus.weights[j] += h;
                minus.weights[j] -= h;
            } else {
                plus.bias += h;
                minus.bias -= h;
            }
            let numeric = (plus.loss_and_grad(&xs, &ls).0 - minus.loss_and_grad(&xs, &ls).0) / (2.0 * h);
            let analytic = if j < dim { gw[j] } else { gb };
            worst_lr = worst_lr.max(rel_err(analytic, numeric, 1e-8));
        }
    }
    let elapsed = start.elapsed();
    board.check(
        "gradient correctness",
        worst_cnn < CNN_GRAD_REL && worst_lr < LOGREG_GRAD_REL && elapsed < GRAD_BUDGET,
        format!(
            "cnn max rel err {worst_cnn:.2e} over {checked} params (< {CNN_GRAD_REL:e}), \
             logreg max rel err {worst_lr:.2e} (< {LOGREG_GRAD_REL:e}), {:.1}s (< {}s)",
            elapsed.as_secs_f64(),
            GRAD_BUDGET.as_secs()
        ),
    );
}

// ---------------------------------------------------------------- oracles

fn kappa_oracle(board: &mut Board) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    let mut tables = 0;
    while tables < KAPPA_TABLES {
        let [pp, pn, np, nn]: [usize; 4] = std::array::from_fn(|_| rng.gen_range(0..15));
        let n = pp + pn + np + nn;
        if n == 0 {
            continue;
        }
        let (nf, ppf, pnf, npf, nnf) = (n as f64, pp as f64, pn as f64, np as f64, nn as f64);
        let p_o = (ppf + nnf) / nf;
        let p_e = ((ppf + pnf) * (ppf + npf) + (npf + nnf) * (pnf + nnf)) / (nf * nf);
        if p_e >= 1.0 {
            continue;
        }
        let expected = (p_o - p_e) / (1.0 - p_e);
        let mut a = Vec::new();
        let mut b = Vec::new();
        for (count, x, y) in [
            (pp, Label::Political, Label::Political),
            (pn, Label::Political, Label::NonPolitical),
            (np, Label::NonPolitical, Label::Political),
            (nn, Label::NonPolitical, Label::NonPolitical),
        ] {
            a.extend(std::iter::repeat(x).take(count));
            b.extend(std::iter::repeat(y).take(count));
        }
        let got = cohen_kappa(&a, &b).unwrap().kappa;
        worst = worst.max((got - expected).abs());
        tables += 1;
    }
    let fixture = cohen_kappa(
        &[Label::Political, Label::Political, Label::NonPolitical, Label::NonPolitical, Label::Political],
        &[Label::Political, Label::NonPolitical, Label::NonPolitical, Label::NonPolitical, Label::Political],
    )
    .unwrap();
    let fixture_ok = (fixture.kappa - 0.32 / 0.52).abs() < KAPPA_TOL && fixture.landis_koch_band == "Substantial";
    board.check(
        "oracle: cohen kappa",
        worst < KAPPA_TOL && fixture_ok,
        format!(
            "{tables} random tables, max |err| {worst:.1e} (< {KAPPA_TOL:e}); 5-item fixture {:.4} {}",
            fixture.kappa, fixture.landis_koch_band
        ),
    );
}

/// Area under the step ROC built by sweeping every distinct score, summed
/// by trapezoids. Independent of the library's ROC code.
fn trapezoid_auc(scores: &[f64], labels: &[Label]) -> f64 {
    let pos = labels.iter().filter(|l| l.is_political()).count() as f64;
    let neg = labels.len() as f64 - pos;
    let mut cuts: Vec<f64> = scores.to_vec();
    cuts.sort_by(|a, b| b.total_cmp(a));
    cuts.dedup();
    let mut area = 0.0;
    let (mut fpr0, mut tpr0) = (0.0, 0.0);
    for t in cuts {
        let tp = scores.iter().zip(labels).filter(|(s, l)| **s >= t && l.is_political()).count() as f64;
        let fp = scores.iter().zip(labels).filter(|(s, l)| **s >= t && !l.is_political()).count() as f64;
        let (fpr, tpr) = (fp / neg, tp / pos);
        area += (fpr - fpr0) * (tpr + tpr0) / 2.0;
        (fpr0, tpr0) = (fpr, tpr);
    }
    area
}

fn random_scored(rng: &mut ChaCha8Rng, max_len: usize) -> (Vec<f64>, Vec<Label>) {
    loop {
        let n = rng.gen_range(2..max_len);
        // coarse grid so ties are common
        let scores: Vec<f64> = (0..n).map(|_| (rng.gen_range(0..=20) as f64) / 20.0).collect();
        let labels: Vec<Label> = (0..n).map(|_| Label::from_political(rng.gen())).collect();
        let pos = labels.iter().filter(|l| l.is_political()).count();
        if pos > 0 && pos < n {
            return (scores, labels);
        }
    }
}

fn auc_oracle(board: &mut Board) {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..AUC_SETS {
        let (scores, labels) = random_scored(&mut rng, 60);
        let rank = auc_rank(&scores, &labels).unwrap();
        let curve = roc_curve(&scores, &labels).unwrap().area();
        worst = worst.max((rank - trapezoid_auc(&scores, &labels)).abs()).max((rank - curve).abs());
    }
    board.check(
        "oracle: rank auc vs trapezoid roc",
        worst < AUC_TOL,
        format!("{AUC_SETS} score sets with ties, max |err| {worst:.1e} (< {AUC_TOL:e})"),
    );
}

/// Posterior by direct Bayes over a dense 4-slot vocabulary.
fn brute_force_posterior(docs: &[[u32; 4]], labels: &[Label], alpha: f64, x: &[u32; 4]) -> f64 {
    let mut joint = [0.0; 2];
    for (c, class) in [Label::Political, Label::NonPolitical].into_iter().enumerate() {
        let members: Vec<&[u32; 4]> = docs.iter().zip(labels).filter(|(_, l)| **l == class).map(|(d, _)| d).collect();
        let prior = members.len() as f64 / docs.len() as f64;
        let total: f64 = members.iter().flat_map(|d| d.iter()).map(|&k| k as f64).sum();
        let mut p = prior;
        for j in 0..4 {
            let count: f64 = members.iter().map(|d| d[j] as f64).sum();
            p *= ((count + alpha) / (total + 4.0 * alpha)).powi(x[j] as i32);
        }
        joint[c] = p;
    }
    joint[0] / (joint[0] + joint[1])
}

fn mnb_oracle(board: &mut Board) {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let sparse = |d: &[u32; 4]| SparseVector::from_counts(4, d.iter().enumerate().map(|(i, &c)| (i, c))).unwrap();
    let mut worst: f64 = 0.0;
    let mut queries = 0;
    for _ in 0..50 {
        let n = rng.gen_range(4..12);
        let docs: Vec<[u32; 4]> = (0..n).map(|_| std::array::from_fn(|_| rng.gen_range(0..4))).collect();
        let mut labels: Vec<Label> = (0..n).map(|_| Label::from_political(rng.gen())).collect();
        labels[0] = Label::Political;
        labels[1] = Label::NonPolitical;
        let alpha = [1.0, 0.5, 0.1][rng.gen_range(0..3)];
        let feats: Vec<SparseVector> = docs.iter().map(sparse).collect();
        let model = train_mnb(&feats, &labels, alpha).unwrap();
        // every count vector with entries in 0..3
        for code in 0..81u32 {
            let x: [u32; 4] = std::array::from_fn(|j| (code / 3u32.pow(j as u32)) % 3);
            let got = model.predict_proba(&sparse(&x)).unwrap();
            worst = worst.max((got - brute_force_posterior(&docs, &labels, alpha, &x)).abs());
            queries += 1;
        }
    }
    board.check(
        "oracle: mnb vs brute-force bayes",
        worst < MNB_TOL,
        format!("{queries} queries on a 4-token vocabulary, max |err| {worst:.1e} (< {MNB_TOL:e})"),
    );
}

// ---------------------------------------------------------------- calibration

fn calibration_contract(board: &mut Board) {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut violations = Vec::new();
    let mut runs = 0;
    for set in 0..CALIBRATION_SETS {
        let n = rng.gen_range(50..400);
        let labels: Vec<Label> = (0..n).map(|i| Label::from_political(i % 3 == 0)).collect();
        let scores: Vec<f64> = labels
            .iter()
            .map(|l| {
                let s: f64 = rng.gen_range(0.0..1.0);
                let s = if l.is_political() { s.sqrt() } else { s * s };
                (s * 1000.0).round() / 1000.0
            })
            .collect();
        let negatives = labels.iter().filter(|l| !l.is_political()).count() as f64;
        let fpr_at = |t: f64| {
            scores.iter().zip(&labels).filter(|(s, l)| **s >= t && !l.is_political()).count() as f64 / negatives
        };
        for target in CALIBRATION_TARGETS {
            runs += 1;
            let cal = calibrate_threshold(&scores, &labels, target).unwrap();
            let fpr = fpr_at(cal.threshold);
            if fpr > target || (fpr - cal.achieved_fpr).abs() > 1e-15 {
                violations.push(format!("set {set} target {target}: fpr {fpr}"));
            }
            // no observed score below the chosen threshold is also feasible
            if let Some(lower) = scores.iter().filter(|&&s| s < cal.threshold && fpr_at(s) <= target).copied().reduce(f64::min) {
                violations.push(format!("set {set} target {target}: {lower} < {} also feasible", cal.threshold));
            }
        }
    }

    // flags at a higher threshold are a subset of flags at a lower one
    let corpus = adwatch::synth::generate(&adwatch::synth::SynthConfig {
        seed: 9,
        labeled: 200,
        corpus_rows: 800,
        declared_only: 20,
        ..Default::default()
    });
    let texts: Vec<&str> = corpus.labeled.iter().map(|l| l.ad.text.as_str()).collect();
    let labels: Vec<Label> = corpus.labeled.iter().map(|l| l.label).collect();
    let clf = train_classifier(&ModelSpec::defaults(ModelKind::Mnb), &texts, &labels, None).unwrap();
    let mut previous: Option<HashSet<String>> = None;
    let mut monotone = true;
    let mut sizes = Vec::new();
    for t in [0.0, 0.1, 0.3, 0.5, 0.7, 0.9, 0.99, 1.0] {
        let flags: HashSet<String> = score_corpus(&clf, &corpus.corpus, t, "m")
            .unwrap()
            .into_iter()
            .map(|f| f.ad_id)
            .collect();
        if let Some(prev) = &previous {
            monotone &= flags.is_subset(prev);
        }
        sizes.push(flags.len());
        previous = Some(flags);
    }
    board.check(
        "calibration contract",
        violations.is_empty() && monotone,
        format!(
            "{runs} calibrations, {} violations{}; score_corpus nested across thresholds: {monotone} (sizes {sizes:?})",
            violations.len(),
            violations.first().map(|v| format!(" (first: {v})")).unwrap_or_default()
        ),
    );
}

// ---------------------------------------------------------------- CLI helpers

fn adwatch(data: &Path, args: &[&str]) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_adwatch"))
        .args(args)
        .env("ADWATCH_DATA_DIR", data)
        .output()
        .expect("run adwatch");
    assert!(
        out.status.success(),
        "adwatch {args:?} failed ({}): {}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
    out.stdout
}

fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Vec<T> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

struct ModelRun {
    kind: ModelKind,
    report: CvReport,
    model_path: PathBuf,
    audit: Value,
    audit_bytes: Vec<u8>,
}

fn run_model(dir: &Path, kind: ModelKind) -> ModelRun {
    let k = kind.as_str();
    let d = dir.to_str().unwrap();
    let scores = format!("{d}/{k}-oof.csv");
    let cal = format!("{d}/{k}-cal.json");
    let model_path = dir.join(format!("{k}.adwm"));
    let cv_seed = CV_SEED.to_string();
    let train_seed = TRAIN_SEED.to_string();
    let target = AUDIT_TARGET_FPR.to_string();
    let report = adwatch(
        dir,
        &["--json", "evaluate", "--model", k, "--folds", "10", "--seed", &cv_seed, "--scores-out", &scores],
    );
    adwatch(dir, &["--json", "calibrate", "--scores", &scores, "--target-fpr", &target, "-o", &cal]);
    adwatch(dir, &["--json", "train", "--model", k, "--seed", &train_seed, "-o", model_path.to_str().unwrap()]);
    let audit_bytes = audit(dir, &model_path, &cal);
    ModelRun {
        kind,
        report: serde_json::from_slice(&report).unwrap(),
        model_path,
        audit: serde_json::from_slice(&audit_bytes).unwrap(),
        audit_bytes,
    }
}

fn audit(dir: &Path, model: &Path, cal: &str) -> Vec<u8> {
    adwatch(
        dir,
        &[
            "--json",
            "audit",
            "--model",
            model.to_str().unwrap(),
            "--calibration",
            cal,
            "--language",
            "pt",
            "--electoral-period",
            "--dedup",
        ],
    )
}

// ---------------------------------------------------------------- end to end

fn synthetic_end_to_end(board: &mut Board, dir: &Path) -> Vec<ModelRun> {
    let start = Instant::now();
    let seed = SYNTH_SEED.to_string();
    let summary: Value = serde_json::from_slice(&adwatch(dir, &["--json", "gen-synthetic", "--seed", &seed])).unwrap();
    let labeled = summary["labeled"].as_u64().unwrap();
    let labeled_pol = summary["labeled_political"].as_u64().unwrap();
    let rows = summary["corpus_rows"].as_u64().unwrap();
    let pol_rows = summary["political_rows"].as_u64().unwrap();
    board.check(
        "synthetic: generator shape",
        labeled == 2000 && labeled_pol.abs_diff(1000) <= 100 && rows == 40_000 && summary["caption_groups"].as_u64() < Some(rows),
        format!(
            "{labeled} labeled ({labeled_pol} political), {rows} corpus rows ({pol_rows} political, {:.2}%), {} caption groups",
            pol_rows as f64 / rows as f64 * 100.0,
            summary["caption_groups"]
        ),
    );

    let truth: Vec<TruthRow> = read_jsonl(&dir.join("truth.jsonl"));
    let truth_by_id: HashMap<&str, &TruthRow> = truth.iter().map(|t| (t.id.as_str(), t)).collect();
    let survivors = truth.iter().filter(|t| t.survivor).count();
    let political_survivors = truth.iter().filter(|t| t.survivor && t.political).count();
    let negative_survivors = survivors - political_survivors;

    let mut runs = Vec::new();
    for kind in ModelKind::ALL {
        let t = Instant::now();
        let run = run_model(dir, kind);
        let acc = run.report.mean("accuracy").unwrap();
        let auc = run.report.mean("auc").unwrap();
        board.check(
            &format!("synthetic: {kind} 10-fold cv"),
            acc >= MIN_ACCURACY && auc >= MIN_AUC,
            format!("accuracy {acc:.4} (>= {MIN_ACCURACY}), auc {auc:.4} (>= {MIN_AUC})"),
        );

        let a = &run.audit;
        let flagged: Vec<&str> = a["flags"].as_array().unwrap().iter().map(|f| f["ad_id"].as_str().unwrap()).collect();
        let tp = flagged.iter().filter(|id| truth_by_id[*id].political).count();
        let fp = flagged.len() - tp;
        let recall = tp as f64 / political_survivors as f64;
        let false_flag = fp as f64 / negative_survivors as f64;
        let matched: BTreeSet<&str> =
            a["matched_declared"].as_array().unwrap().iter().map(|m| m["flag_id"].as_str().unwrap()).collect();
        let expected_matched: BTreeSet<&str> =
            flagged.iter().copied().filter(|id| truth_by_id[*id].declared_match.is_some()).collect();
        let compliant: BTreeSet<&str> =
            a["compliance"]["compliant_ids"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
        let expected_compliant: BTreeSet<&str> = flagged.iter().copied().filter(|id| truth_by_id[*id].compliant).collect();
        board.check(
            &format!("synthetic: {kind} audit at {}% fpr", AUDIT_TARGET_FPR * 100.0),
            recall >= MIN_AUDIT_RECALL
                && false_flag <= MAX_FALSE_FLAG_RATE
                && matched == expected_matched
                && compliant == expected_compliant,
            format!(
                "threshold {:.4}, flagged {}, recall {recall:.3} (>= {MIN_AUDIT_RECALL}), false-flag rate {:.3}% (<= {}%), \
                 declared matches {} (truth {}), compliant {} (truth {}), {:.0}s",
                a["threshold"].as_f64().unwrap(),
                flagged.len(),
                false_flag * 100.0,
                MAX_FALSE_FLAG_RATE * 100.0,
                matched.len(),
                expected_matched.len(),
                compliant.len(),
                expected_compliant.len(),
                t.elapsed().as_secs_f64()
            ),
        );
        runs.push(run);
    }

    let after_dedup: Vec<u64> = runs.iter().map(|r| r.audit["corpus"]["after_dedup"].as_u64().unwrap()).collect();
    let dup_store = caption_duplicate_store(38_110, 20_125, 1);
    let kept = dedup_by_caption(&dup_store).len();
    board.check(
        "synthetic: dedup survivor count",
        after_dedup.iter().all(|&n| n as usize == survivors) && dup_store.len() == 58_235 && kept == 38_110,
        format!(
            "audit pipeline keeps {} (truth {survivors}); duplicate fixture {} -> {kept} (expected 38110)",
            after_dedup[0],
            dup_store.len()
        ),
    );
    let elapsed = start.elapsed();
    board.check(
        "synthetic: runtime",
        elapsed < E2E_BUDGET,
        format!("{:.0}s (< {}s) on {} cpu(s)", elapsed.as_secs_f64(), E2E_BUDGET.as_secs(), std::thread::available_parallelism().map_or(1, |n| n.get())),
    );
    runs
}

// ---------------------------------------------------------------- determinism

fn determinism(board: &mut Board, dir: &Path, runs: &[ModelRun]) {
    let cv_seed = CV_SEED.to_string();
    let d = dir.to_str().unwrap();
    let eval = |out: &str| {
        adwatch(dir, &["--json", "evaluate", "--model", "mnb", "--folds", "10", "--seed", &cv_seed, "-o", &format!("{d}/{out}")])
    };
    let first = eval("eval-a.json");
    let second = eval("eval-b.json");
    let files_equal = std::fs::read(dir.join("eval-a.json")).unwrap() == std::fs::read(dir.join("eval-b.json")).unwrap();

    let mut audits_equal = true;
    for run in runs {
        let cal = format!("{d}/{}-cal.json", run.kind.as_str());
        audits_equal &= audit(dir, &run.model_path, &cal) == run.audit_bytes;
    }
    board.check(
        "determinism: evaluate and audit",
        first == second && files_equal && audits_equal,
        format!(
            "evaluate --model mnb --folds 10 --seed 7 twice: identical {}; audit rerun identical for all models: {audits_equal}",
            first == second && files_equal
        ),
    );

    // CLI score vs service /score on the same model files
    let corpus: Vec<Value> = read_jsonl(&dir.join("corpus.jsonl"));
    let sample: Vec<&Value> = corpus.iter().step_by(corpus.len() / PARITY_TEXTS).take(PARITY_TEXTS).collect();
    let input = dir.join("parity.jsonl");
    std::fs::write(&input, sample.iter().map(|v| v.to_string() + "\n").collect::<String>()).unwrap();
    let rt = tokio::runtime::Runtime::new().unwrap();
    let mut mismatches = 0;
    let mut compared = 0;
    for run in runs {
        let cli: Vec<Value> = serde_json::from_slice(&adwatch(
            dir,
            &["--json", "score", "--model", run.model_path.to_str().unwrap(), "--input", input.to_str().unwrap()],
        ))
        .unwrap();
        let state = adwatch_service::load_state(&adwatch_service::ServiceConfig {
            model: Some(run.model_path.clone()),
            embeddings: Some(dir.join("embeddings.txt")),
            ..Default::default()
        })
        .unwrap();
        let app = adwatch_service::router(Arc::clone(&state));
        for (ad, c) in sample.iter().zip(&cli) {
            let body = json!({ "text": ad["text"] }).to_string();
            let req = Request::post("/score").header("content-type", "application/json").body(Body::from(body)).unwrap();
            let resp = rt.block_on(app.clone().oneshot(req)).unwrap();
            let bytes = rt.block_on(resp.into_body().collect()).unwrap().to_bytes();
            let svc: Value = serde_json::from_slice(&bytes).unwrap();
            let (a, b) = (c["probability"].as_f64().unwrap(), svc["probability"].as_f64().unwrap());
            mismatches += (a.to_bits() != b.to_bits()) as usize;
            compared += 1;
        }
    }
    board.check(
        "determinism: cli and service scores",
        mismatches == 0 && compared == PARITY_TEXTS * runs.len(),
        format!("{compared} texts across {} models, {mismatches} bit mismatches", runs.len()),
    );
}

#[test]
fn acceptance() {
    let mut board = Board::default();
    gradients(&mut board);
    kappa_oracle(&mut board);
    auc_oracle(&mut board);
    mnb_oracle(&mut board);
    calibration_contract(&mut board);

    let dir = tempfile::tempdir().unwrap();
    let runs = synthetic_end_to_end(&mut board, dir.path());
    determinism(&mut board, dir.path(), &runs);

    board.skip(
        "gold standard reproduction (optional)",
        "the published 20,000-ad gold standard is not bundled and this suite runs offline",
    );

    let failed: Vec<&Outcome> = board.0.iter().filter(|o| o.pass == Some(false)).collect();
    let passed = board.0.iter().filter(|o| o.pass == Some(true)).count();
    report(&format!("acceptance: {passed} passed, {} failed, {} skipped", failed.len(), board.0.len() - passed - failed.len()));
    assert!(
        failed.is_empty(),
        "failed: {}",
        failed.iter().map(|o| format!("{} ({})", o.name, o.detail)).collect::<Vec<_>>().join("; ")
    );
}
