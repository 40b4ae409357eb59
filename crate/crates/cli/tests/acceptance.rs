//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each
//! and exits nonzero if any failed.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use onml::anchors::{learn_anchors, Anchor, AnchorSeedSet};
use onml::blackbox::{logistic_loss_and_gradient, BlackBox, ScoreVector, SparseVec, TfidfClassifier, TrainConfig};
use onml::composer::{compose, OntologyExplanation};
use onml::corpus::LabeledCorpus;
use onml::eval::{run_eval, EvalConfig, Variant};
use onml::ontology::{self, Concept, Ontology, Relation};
use onml::surrogate::{
    build_units, fit_local, fit_surrogate, importance_score, sample_perturbations, ImportanceScorer, Perturbation,
    SurrogateConfig,
};
use onml::synth::{planted_corpus, planted_ontology, PlantedConfig};
use onml::textproc::{match_terms, tokenize, Stopwords, TokenizedDoc, UnitSpan};
use onml::triplex::{align_triplex, Triplex, TriplexIndex};
use onml::tuples::{extract_tuples, OntologyTuple};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn timed(limit: Duration, start: Instant) -> Result<Duration, String> {
    let t = start.elapsed();
    check(t < limit, format!("took {t:.2?}, limit {limit:?}"))?;
    Ok(t)
}

// 1 -------------------------------------------------------------------------

fn tuples_worked_example() -> Outcome {
    let start = Instant::now();
    let o = ontology::shipped("drug_abuse").unwrap();
    let doc = tokenize(
        "She uses orange juice and does not like weed. She knows that smoke causes addiction and headache.",
        &Stopwords::builtin(),
    );
    let got: BTreeSet<(String, String)> = extract_tuples(&doc, &o, 3)
        .into_iter()
        .map(|t| (t.first.phrase, t.second.phrase))
        .collect();
    let want: BTreeSet<(String, String)> = [("smoke", "addiction"), ("smoke", "headache")]
        .into_iter()
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .collect();
    check(got == want, format!("got {got:?}"))?;
    let t = timed(Duration::from_secs(1), start)?;
    Ok(format!("exactly {{(smoke, addiction), (smoke, headache)}} in {t:.2?}"))
}

// 2 -------------------------------------------------------------------------

fn composition_worked_example() -> Outcome {
    let text = "We were filling out all the forms in the application. However, there is a letter in \
                saying loss mitigation application denied for not sending information to us.";
    let doc = tokenize(text, &Stopwords::builtin());
    let find = |w: &str| {
        doc.tokens
            .iter()
            .position(|t| t.sent_idx == 1 && t.norm == w)
            .ok_or(format!("{w} not found"))
    };
    let (loss, app, not) = (find("loss")?, find("application")?, find("not")?);
    let tuple = OntologyTuple {
        first: doc.span(loss..loss + 1),
        second: doc.span(app..app + 1),
        source_concept: "event_outcome".into(),
        target_concept: "event".into(),
        distance: app - loss,
    };
    let anchor = Anchor {
        sentence: 1,
        span: doc.span(not..not + 3),
        text: "not sending information".into(),
        score: 0.0,
    };
    let triplex = Triplex {
        doc_id: "complaint".into(),
        subject: "a letter".into(),
        predicate: "denied".into(),
        object: "mitigation application".into(),
        confidence: 0.9,
    };
    let aligned = align_triplex(&doc, &triplex).ok_or("triplex did not align")?;
    let out = compose(
        &doc,
        &[OntologyExplanation::from_tuple(&tuple)],
        &[anchor],
        &[aligned],
        &|_: &[usize]| 1.0,
    )
    .map_err(|e| e.to_string())?;
    let want = "a letter in saying loss mitigation application denied for not sending information";
    check(out.len() == 1, format!("{} explanations", out.len()))?;
    check(out[0].text == want, format!("got {:?}", out[0].text))?;
    Ok(format!("\"{want}\""))
}

// 3 -------------------------------------------------------------------------

fn normal_equations(samples: &[Perturbation], cols: &[usize], ridge: f64) -> (Vec<f64>, f64) {
    let n = samples.len();
    let p = cols.len() + 1;
    let x = DMatrix::from_fn(n, p, |i, j| {
        if j == 0 || samples[i].mask[cols[j - 1]] {
            1.0
        } else {
            0.0
        }
    });
    let w = DMatrix::from_diagonal(&DVector::from_iterator(n, samples.iter().map(|s| s.weight)));
    let y = DVector::from_iterator(n, samples.iter().map(|s| s.scores.score(1)));
    let mut penalty = DMatrix::identity(p, p) * ridge;
    penalty[(0, 0)] = 0.0;
    let beta = (x.transpose() * &w * &x + penalty)
        .lu()
        .solve(&(x.transpose() * &w * y))
        .expect("solvable");
    (beta.iter().skip(1).copied().collect(), beta[0])
}

fn surrogate_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let labels = vec!["neg".to_string(), "pos".to_string()];
    let mut worst: f64 = 0.0;
    for _ in 0..500 {
        let d = rng.gen_range(1..=8);
        let masks: Vec<Vec<bool>> = if d <= 6 {
            (0..1u32 << d).map(|b| (0..d).map(|j| b >> j & 1 == 1).collect()).collect()
        } else {
            (0..96).map(|_| (0..d).map(|_| rng.gen_bool(0.5)).collect()).collect()
        };
        let samples: Vec<Perturbation> = masks
            .into_iter()
            .map(|mask| {
                let y = rng.gen_range(0.0..1.0);
                Perturbation {
                    mask,
                    text: String::new(),
                    weight: rng.gen_range(0.05..=1.0),
                    scores: ScoreVector::new(vec![1.0 - y, y], labels.clone()).unwrap(),
                }
            })
            .collect();
        let ridge = 10f64.powf(rng.gen_range(-4.0..-1.0));
        let cfg = SurrogateConfig {
            ridge,
            top_k: d,
            ..Default::default()
        };
        let g = fit_surrogate(&samples, 1, &cfg).map_err(|e| e.to_string())?;
        let cols: Vec<usize> = (0..d).collect();
        let (coef, intercept) = normal_equations(&samples, &cols, ridge);
        for (a, b) in g.coefficients.iter().zip(&coef) {
            worst = worst.max((a - b).abs());
        }
        worst = worst.max((g.intercept - intercept).abs());
    }
    check(worst < 1e-8, format!("max coefficient error {worst:e}"))?;
    let t = timed(Duration::from_secs(30), start)?;
    Ok(format!("500 instances, max error {worst:.1e} in {t:.2?}"))
}

// 4 -------------------------------------------------------------------------

const VOCAB: [&str; 12] = [
    "red", "green", "blue", "cat", "dog", "fish", "run", "jump", "swim", "big", "small", "fast",
];

fn random_text(rng: &mut ChaCha8Rng, len: usize) -> String {
    let mut out: Vec<String> = Vec::new();
    for i in 0..len {
        let w = if rng.gen_bool(0.2) {
            ["the", "of", "and"].choose(rng).unwrap()
        } else {
            VOCAB.choose(rng).unwrap()
        };
        out.push(w.to_string());
        if i + 1 < len && rng.gen_bool(0.1) {
            out.last_mut().unwrap().push('.');
        }
    }
    out.join(" ") + "."
}

fn random_ontology(rng: &mut ChaCha8Rng) -> Ontology {
    let n = rng.gen_range(1..=5);
    let concepts = (0..n)
        .map(|i| Concept {
            id: format!("c{i}"),
            label: format!("C{i}"),
            terms: (0..rng.gen_range(1..=4))
                .map(|_| {
                    if rng.gen_bool(0.25) {
                        format!("{} {}", VOCAB.choose(rng).unwrap(), VOCAB.choose(rng).unwrap())
                    } else {
                        VOCAB.choose(rng).unwrap().to_string()
                    }
                })
                .collect(),
        })
        .collect();
    let mut relations = Vec::new();
    for a in 0..n {
        for b in 0..n {
            if rng.gen_bool(0.35) {
                relations.push(Relation {
                    source: format!("c{a}"),
                    label: "r".into(),
                    target: format!("c{b}"),
                });
            }
        }
    }
    Ontology::new("random", concepts, relations).unwrap()
}

type TupleKey = (usize, usize, usize, usize, String, String);

fn brute_force_tuples(doc: &TokenizedDoc, o: &Ontology, gamma: usize) -> BTreeSet<TupleKey> {
    let first_content = |s: &UnitSpan| (s.start..s.end).find_map(|i| doc.tokens[i].content_idx);
    let matched = match_terms(doc, o);
    let mut out = BTreeSet::new();
    for (a, ca) in &matched {
        for (b, cb) in &matched {
            if (a.start, a.end) == (b.start, b.end) || a.sentence != b.sentence {
                continue;
            }
            if let (Some(pa), Some(pb)) = (first_content(a), first_content(b)) {
                if pa.abs_diff(pb) <= gamma && o.has_edge(ca, cb).unwrap() {
                    out.insert((a.start, a.end, b.start, b.end, ca.clone(), cb.clone()));
                }
            }
        }
    }
    out
}

fn tuple_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let sw: Stopwords = ["the", "of", "and"].into_iter().collect();
    let mut nonempty = 0;
    for i in 0..1000 {
        let o = random_ontology(&mut rng);
        let doc = tokenize(&random_text(&mut rng, 20), &sw);
        let gamma = rng.gen_range(0..=6);
        let got = extract_tuples(&doc, &o, gamma);
        let keys: BTreeSet<TupleKey> = got
            .iter()
            .map(|t| {
                (
                    t.first.start,
                    t.first.end,
                    t.second.start,
                    t.second.end,
                    t.source_concept.clone(),
                    t.target_concept.clone(),
                )
            })
            .collect();
        check(keys.len() == got.len(), format!("instance {i}: duplicate tuples"))?;
        check(keys == brute_force_tuples(&doc, &o, gamma), format!("instance {i}: mismatch on {:?}", doc.text))?;
        nonempty += usize::from(!got.is_empty());
    }
    Ok(format!("1000 instances equal ({nonempty} with tuples)"))
}

// 5 -------------------------------------------------------------------------

fn joint_sampling() -> Outcome {
    let o = ontology::shipped("drug_abuse").unwrap();
    let doc = tokenize(
        "She uses orange juice and does not like weed. She knows that smoke causes addiction and headache.",
        &Stopwords::builtin(),
    );
    let tuples = extract_tuples(&doc, &o, 3);
    check(!tuples.is_empty(), "no tuples")?;
    let units = build_units(&doc, &tuples);
    let mut report = Vec::new();
    for threshold in [0.5, 0.7] {
        let masks = sample_perturbations(&units, 10_000, threshold, 23);
        check(masks.len() == 10_000, "wrong sample count")?;
        for t in &tuples {
            let members: Vec<usize> = t.first.range().chain(t.second.range()).collect();
            for m in &masks {
                let deleted = units.deleted_tokens(m);
                let bits: BTreeSet<bool> = members.iter().map(|w| deleted.contains(w)).collect();
                check(bits.len() == 1, "tuple members split in a sample")?;
            }
        }
        let want = 1.0 - threshold;
        for u in 0..units.len() {
            let rate = masks[1..].iter().filter(|m| m[u]).count() as f64 / (masks.len() - 1) as f64;
            check((rate - want).abs() <= 0.02, format!("unit {u} rate {rate:.4} vs {want}"))?;
        }
        report.push(format!("threshold {threshold}"));
    }
    Ok(format!("tuple bits joint in 100% of 10000 masks, rates within 0.02 ({})", report.join(", ")))
}

// 6 -------------------------------------------------------------------------

struct Weighted;

fn word_weight(word: &str) -> f64 {
    let h = word.bytes().fold(7u64, |h, b| h.wrapping_mul(31).wrapping_add(b as u64));
    (h % 13) as f64 / 13.0 - 0.4
}

impl BlackBox for Weighted {
    fn labels(&self) -> &[String] {
        static L: std::sync::OnceLock<Vec<String>> = std::sync::OnceLock::new();
        L.get_or_init(|| vec!["a".into(), "b".into()])
    }
    fn predict(&self, text: &str) -> onml::Result<ScoreVector> {
        let s: f64 = text.split_whitespace().map(|w| word_weight(&w.to_lowercase())).sum();
        let p = 1.0 / (1.0 + (-s).exp());
        ScoreVector::new(vec![1.0 - p, p], self.labels().to_vec())
    }
}

fn anchor_oracle() -> Outcome {
    const WORDS: [&str; 10] = ["we", "paid", "the", "bill", "on", "time", "and", "they", "sent", "letters"];
    const SEEDS: [&str; 4] = ["not", "no", "without", "against"];
    let mut rng = ChaCha8Rng::seed_from_u64(66);
    let seeds = AnchorSeedSet::new(&SEEDS).map_err(|e| e.to_string())?;
    let sw = Stopwords::builtin();
    for i in 0..200 {
        let mut words: Vec<&str> = (0..rng.gen_range(3..12)).map(|_| *WORDS.choose(&mut rng).unwrap()).collect();
        for _ in 0..rng.gen_range(1..=2) {
            let at = rng.gen_range(0..=words.len());
            words.insert(at, SEEDS.choose(&mut rng).unwrap());
        }
        let doc = tokenize(&(words.join(" ") + "."), &sw);
        let cfg = SurrogateConfig {
            samples: 200,
            seed: i,
            ..Default::default()
        };
        let fit = fit_local(&doc, &[], &Weighted, 1, &cfg).map_err(|e| e.to_string())?;
        let scorer = ImportanceScorer::new(&doc, &fit.units, &Weighted, &fit.surrogate).map_err(|e| e.to_string())?;
        let got = learn_anchors(&doc, &seeds, &scorer).map_err(|e| e.to_string())?;

        let range = doc.sentence(0);
        let mut best: Option<((usize, usize), f64)> = None;
        for a in range.clone() {
            if !SEEDS.contains(&doc.tokens[a].norm.as_str()) {
                continue;
            }
            for b in a + 1..=range.end {
                let span: Vec<usize> = (a..b).collect();
                let s = importance_score(&doc, &fit.units, &span, &Weighted, &fit.surrogate).unwrap();
                if best.is_none_or(|(_, v)| s > v) {
                    best = Some(((a, b), s));
                }
            }
        }
        let got = got.first().map(|a| (a.span.start, a.span.end));
        check(got == best.map(|b| b.0), format!("sentence {i} {:?}: {got:?} vs {best:?}", doc.text))?;
    }
    Ok("200 sentences equal the exhaustive argmax".into())
}

// 7 -------------------------------------------------------------------------

fn faithfulness() -> Outcome {
    let start = Instant::now();
    let all = planted_corpus(900, 7, &PlantedConfig::default());
    let train = LabeledCorpus::new(all.records()[..600].to_vec()).unwrap();
    let test = LabeledCorpus::new(all.records()[600..].to_vec()).unwrap();
    let model = TfidfClassifier::train(&train, &TrainConfig::default(), &Stopwords::builtin())
        .map_err(|e| e.to_string())?;
    let cfg = EvalConfig {
        top_k: vec![1],
        variants: vec![Variant::Onml, Variant::LimeMode],
        seed: 7,
        ..Default::default()
    };
    let report = run_eval(&test, &model, model.fingerprint(), &planted_ontology(), &TriplexIndex::default(), &cfg)
        .map_err(|e| e.to_string())?;
    let onml = report.aggregate(Variant::Onml, 1).unwrap();
    let lime = report.aggregate(Variant::LimeMode, 1).unwrap();
    let summary = format!(
        "onml AC {:.2}% SC {:.2}% vs lime_mode AC {:.2}% SC {:.2}% on {} docs (accuracy {:.3})",
        onml.ac_percent, onml.sc_percent, lime.ac_percent, lime.sc_percent, onml.docs, onml.original_accuracy
    );
    check(onml.docs == 300, format!("{} docs", onml.docs))?;
    check(onml.sc >= lime.sc && onml.ac >= lime.ac, summary.clone())?;
    let t = timed(Duration::from_secs(300), start)?;
    Ok(format!("{summary} in {t:.1?}"))
}

// 8 / 10 helpers ------------------------------------------------------------

fn onml(args: &[&str]) -> Result<std::process::Output, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_onml"))
        .args(args)
        .env_remove("ONML_CONFIG")
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("onml {args:?} failed: {}", String::from_utf8_lossy(&out.stderr)));
    }
    Ok(out)
}

fn small_model(dir: &Path) -> Result<(), String> {
    let all = planted_corpus(640, 3, &PlantedConfig::default());
    LabeledCorpus::new(all.records()[..600].to_vec()).unwrap().save(dir.join("train.jsonl")).unwrap();
    LabeledCorpus::new(all.records()[600..].to_vec()).unwrap().save(dir.join("test.jsonl")).unwrap();
    planted_ontology().save(dir.join("planted.onto")).unwrap();
    let p = |f: &str| dir.join(f).to_string_lossy().into_owned();
    onml(&["train", "--corpus", &p("train.jsonl"), "--output", &p("model.json")])?;
    Ok(())
}

// 8 -------------------------------------------------------------------------

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    small_model(dir.path())?;
    let p = |f: &str| dir.path().join(f).to_string_lossy().into_owned();
    let run = |out: &str| {
        onml(&[
            "--seed", "11", "eval", "--model", &p("model.json"), "--ontology", &p("planted.onto"),
            "--corpus", &p("test.jsonl"), "--top-k", "1,2", "--samples", "300", "--builtin-triplexes",
            "--format", "structured", "--output", &p(out),
        ])
        .map(|_| std::fs::read(p(out)).unwrap())
    };
    let (a, b) = (run("a.json")?, run("b.json")?);
    check(!a.is_empty(), "empty report")?;
    check(a == b, "reports differ")?;
    Ok(format!("two eval runs wrote identical {}-byte reports", a.len()))
}

// 9 -------------------------------------------------------------------------

fn gradient_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let dim = rng.gen_range(2..8);
        let n = rng.gen_range(3..12);
        let x: Vec<SparseVec> = (0..n)
            .map(|_| {
                let mut v = SparseVec::new();
                for j in 0..dim {
                    if rng.gen_bool(0.6) {
                        v.push((j, rng.gen_range(-1.0..1.0)));
                    }
                }
                v
            })
            .collect();
        let y: Vec<f64> = (0..n).map(|_| if rng.gen_bool(0.5) { 1.0 } else { 0.0 }).collect();
        let w: Vec<f64> = (0..=dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let l2 = rng.gen_range(0.0..0.1);
        let (_, grad) = logistic_loss_and_gradient(&x, &y, &w, l2);
        let h = 1e-6;
        let numeric: Vec<f64> = (0..w.len())
            .map(|j| {
                let (mut up, mut down) = (w.clone(), w.clone());
                up[j] += h;
                down[j] -= h;
                (logistic_loss_and_gradient(&x, &y, &up, l2).0 - logistic_loss_and_gradient(&x, &y, &down, l2).0)
                    / (2.0 * h)
            })
            .collect();
        let diff = grad.iter().zip(&numeric).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let scale = grad.iter().map(|a| a * a).sum::<f64>().sqrt().max(1e-12);
        worst = worst.max(diff / scale);
    }
    check(worst < 1e-5, format!("relative error {worst:e}"))?;
    Ok(format!("50 instances, max relative error {worst:.1e}"))
}

// 10 ------------------------------------------------------------------------

fn latency() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    small_model(dir.path())?;
    let cfg = PlantedConfig {
        sentences: 30,
        ..Default::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut words: Vec<String> = Vec::new();
    while words.len() < 300 {
        let doc = onml::synth::planted_doc(&mut rng, true, &cfg);
        words.extend(doc.split_whitespace().map(String::from));
        words.extend("She said it was not about smoking weed at all.".split(' ').map(String::from));
    }
    words.truncate(300);
    let text = words.join(" ");
    std::fs::write(dir.path().join("doc.txt"), &text).unwrap();
    let p = |f: &str| dir.path().join(f).to_string_lossy().into_owned();

    let start = Instant::now();
    let out = onml(&[
        "explain", "--model", &p("model.json"), "--ontology", &p("planted.onto"), "--input", &p("doc.txt"),
        "--samples", "1000", "--builtin-triplexes", "--format", "json",
    ])?;
    let t = timed(Duration::from_secs(5), start)?;
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
    check(json["surrogate"]["sample_count"] == 1000, "surrogate did not use 1000 samples")?;
    let n = json["explanations"].as_array().map_or(0, Vec::len);
    Ok(format!("300-word document, 1000 samples, {n} explanations in {t:.2?}"))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("tuple worked example", tuples_worked_example),
        ("composition worked example", composition_worked_example),
        ("surrogate oracle equivalence", surrogate_oracle),
        ("tuple oracle equivalence", tuple_oracle),
        ("joint sampling invariant", joint_sampling),
        ("anchor oracle", anchor_oracle),
        ("directional faithfulness", faithfulness),
        ("eval determinism", determinism),
        ("gradient check", gradient_check),
        ("end-to-end latency", latency),
    ];
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let n = i + 1;
        if !only.is_empty() && !only.contains(&n) {
            continue;
        }
        let result = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match result {
            Ok(detail) => println!("PASS {n:>2} {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {n:>2} {name}: {why}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
