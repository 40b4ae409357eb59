//! Word-deletion evaluation of explainers.
//!
//! For each document and each `k`, the words of the top-`k` explanations are
//! deleted and the document is classified again. Per variant and `k`:
//!
//! * `AC` = accuracy before deletion − accuracy after deletion
//! * `SC` = mean importance score of the deleted word set, computed with the
//!   variant's own surrogate
//!
//! The LIME baseline deletes its `m` highest-weighted words, where `m` is the
//! number of content words the onml variant deleted for the same document
//! and `k`.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::blackbox::{BlackBox, ScoreVector};
use crate::composer::{compose, compose_triplex_only, Explanation};
use crate::corpus::{LabeledCorpus, LabeledRecord};
use crate::error::{Error, Result};
use crate::ontology::Ontology;
use crate::pipeline::{ExplainConfig, Explainer};
use crate::surrogate::{LocalFit, SpanScorer};
use crate::textproc::TokenizedDoc;
use crate::triplex::TriplexIndex;

pub const REPORT_FORMAT: &str = "onml-eval-report";
pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Tuples, anchors and triplexes.
    Onml,
    /// Tuples and anchors.
    OntologyOnly,
    /// Triplexes and anchors over word-level units.
    TriplexOnly,
    /// Highest-weighted words of the word-level surrogate.
    LimeMode,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::Onml,
        Variant::OntologyOnly,
        Variant::TriplexOnly,
        Variant::LimeMode,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Onml => "onml",
            Variant::OntologyOnly => "ontology_only",
            Variant::TriplexOnly => "triplex_only",
            Variant::LimeMode => "lime_mode",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::Eval(format!("unknown variant {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub top_k: Vec<usize>,
    pub variants: Vec<Variant>,
    /// Document `i` is explained with seed `seed + i`.
    pub seed: u64,
    pub explain: ExplainConfig,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            top_k: vec![1],
            variants: Variant::ALL.to_vec(),
            seed: 0,
            explain: ExplainConfig::default(),
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.top_k.is_empty() || self.top_k.contains(&0) {
            return Err(Error::Eval(format!("top_k must be nonempty and ≥ 1, got {:?}", self.top_k)));
        }
        if self.variants.is_empty() {
            return Err(Error::Eval("no variants selected".into()));
        }
        self.explain.surrogate.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deletion {
    pub variant: Variant,
    pub k: usize,
    pub deleted_words: Vec<String>,
    /// Byte ranges of the deleted runs in the original text.
    pub deleted_spans: Vec<[usize; 2]>,
    pub updated_text: String,
    pub updated_label: String,
    /// Score of the originally predicted class after deletion.
    pub updated_score: f64,
    pub ic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantExplanations {
    pub variant: Variant,
    pub explanations: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocRecord {
    pub doc_id: String,
    pub text: String,
    pub label: String,
    pub original_label: String,
    pub original_score: f64,
    pub explanations: Vec<VariantExplanations>,
    pub deletions: Vec<Deletion>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub variant: Variant,
    pub k: usize,
    pub docs: usize,
    pub original_accuracy: f64,
    pub updated_accuracy: f64,
    pub ac: f64,
    pub ac_percent: f64,
    pub sc: f64,
    pub sc_percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub format: String,
    pub version: u32,
    pub ontology: String,
    pub model: String,
    pub config: EvalConfig,
    pub aggregates: Vec<Aggregate>,
    pub documents: Vec<DocRecord>,
}

impl EvalReport {
    pub fn aggregate(&self, variant: Variant, k: usize) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| a.variant == variant && a.k == k)
    }
}

/// Token set deleted by the first `k` explanations.
fn top_k_tokens(expls: &[Explanation], k: usize) -> BTreeSet<usize> {
    expls.iter().take(k).flat_map(Explanation::tokens).collect()
}

/// Units ranked by signed coefficient, largest first; ties to the lower
/// index. Takes tokens until `m` units are in.
fn lime_tokens(fit: &LocalFit, m: usize) -> BTreeSet<usize> {
    let coef = &fit.surrogate.coefficients;
    let mut order: Vec<usize> = (0..coef.len()).collect();
    order.sort_by(|&a, &b| coef[b].total_cmp(&coef[a]).then(a.cmp(&b)));
    order
        .into_iter()
        .take(m)
        .flat_map(|u| fit.units.units()[u].tokens.iter().copied())
        .collect()
}

struct Side<'d> {
    fit: Option<LocalFit>,
    doc: &'d TokenizedDoc,
}

impl Side<'_> {
    fn score(&self, explainer: &Explainer, tokens: &BTreeSet<usize>) -> Result<f64> {
        match &self.fit {
            Some(fit) if !tokens.is_empty() => {
                let scorer = explainer.scorer(self.doc, fit)?;
                scorer.score_span(&tokens.iter().copied().collect::<Vec<_>>())
            }
            _ => Ok(0.0),
        }
    }
}

fn deleted_runs(doc: &TokenizedDoc, tokens: &BTreeSet<usize>) -> Vec<[usize; 2]> {
    let mut runs: Vec<[usize; 2]> = Vec::new();
    let mut prev: Option<usize> = None;
    for &t in tokens {
        let span = &doc.tokens[t].char_span;
        match (prev, runs.last_mut()) {
            (Some(p), Some(run)) if p + 1 == t && doc.tokens[p].sent_idx == doc.tokens[t].sent_idx => {
                run[1] = span.end;
            }
            _ => runs.push([span.start, span.end]),
        }
        prev = Some(t);
    }
    runs
}

struct DocEval<'a> {
    onml: &'a Explainer<'a>,
    lime: &'a Explainer<'a>,
    triplexes: &'a TriplexIndex,
    config: &'a EvalConfig,
}

impl DocEval<'_> {
    fn run(&self, record: &LabeledRecord, seed: u64) -> Result<DocRecord> {
        let model = self.onml.model();
        let wants = |v: Variant| self.config.variants.contains(&v);
        let doc = self.onml.tokenize(&record.text);
        let original = model.predict(&record.text)?;
        let target = original.argmax();
        let supplied = self.triplexes.get(&record.id);

        let mut lists: Vec<(Variant, Vec<Explanation>)> = Vec::new();
        let need_onml = wants(Variant::Onml) || wants(Variant::OntologyOnly) || wants(Variant::LimeMode);
        let onml_side = if need_onml {
            let tuples = self.onml.tuples(&doc);
            let fit = self.onml.fit(&doc, &tuples, target, seed)?;
            if let Some(fit) = &fit {
                let scorer = self.onml.scorer(&doc, fit)?;
                let anchors = self.onml.anchors(&doc, &scorer)?;
                let onto = self.onml.ontology_explanations(&doc, &tuples);
                let aligned = self.onml.triplexes(&doc, &record.id, supplied);
                let full = compose(&doc, &onto, &anchors, &aligned, &scorer)?;
                let no_trip = compose(&doc, &onto, &anchors, &[], &scorer)?;
                lists.push((Variant::Onml, full));
                lists.push((Variant::OntologyOnly, no_trip));
            } else {
                lists.push((Variant::Onml, Vec::new()));
                lists.push((Variant::OntologyOnly, Vec::new()));
            }
            Some(Side { fit, doc: &doc })
        } else {
            None
        };
        let need_lime = wants(Variant::TriplexOnly) || wants(Variant::LimeMode);
        let lime_side = if need_lime {
            let fit = self.lime.fit(&doc, &[], target, seed)?;
            let mut list = Vec::new();
            if let Some(fit) = &fit {
                let scorer = self.lime.scorer(&doc, fit)?;
                let anchors = self.onml.anchors(&doc, &scorer)?;
                let aligned = self.onml.triplexes(&doc, &record.id, supplied);
                list = compose_triplex_only(&doc, &anchors, &aligned, &scorer)?;
            }
            lists.push((Variant::TriplexOnly, list));
            Some(Side { fit, doc: &doc })
        } else {
            None
        };

        let mut deletions = Vec::new();
        for &k in &self.config.top_k {
            let onml_tokens = lists
                .iter()
                .find(|(v, _)| *v == Variant::Onml)
                .map(|(_, l)| top_k_tokens(l, k))
                .unwrap_or_default();
            for &variant in &self.config.variants {
                let (tokens, side, explainer) = match variant {
                    Variant::Onml | Variant::OntologyOnly => {
                        let list = &lists.iter().find(|(v, _)| *v == variant).expect("computed").1;
                        (top_k_tokens(list, k), onml_side.as_ref(), self.onml)
                    }
                    Variant::TriplexOnly => {
                        let list = &lists.iter().find(|(v, _)| *v == variant).expect("computed").1;
                        (top_k_tokens(list, k), lime_side.as_ref(), self.lime)
                    }
                    Variant::LimeMode => {
                        let m = onml_tokens.iter().filter(|&&t| !doc.tokens[t].is_stopword()).count();
                        let side = lime_side.as_ref().expect("computed");
                        let tokens = side.fit.as_ref().map(|f| lime_tokens(f, m)).unwrap_or_default();
                        (tokens, Some(side), self.lime)
                    }
                };
                let side = side.expect("computed");
                let ic = side.score(explainer, &tokens)?;
                let (updated_text, updated): (String, ScoreVector) = if tokens.is_empty() {
                    (record.text.clone(), original.clone())
                } else {
                    let text = doc.delete_tokens(&tokens);
                    let scores = model.predict(&text)?;
                    (text, scores)
                };
                deletions.push(Deletion {
                    variant,
                    k,
                    deleted_words: tokens.iter().map(|&t| doc.tokens[t].surface.clone()).collect(),
                    deleted_spans: deleted_runs(&doc, &tokens),
                    updated_text,
                    updated_label: updated.predicted_label().to_string(),
                    updated_score: updated.score(target),
                    ic,
                });
            }
        }

        let explanations = self
            .config
            .variants
            .iter()
            .map(|&variant| VariantExplanations {
                variant,
                explanations: match variant {
                    Variant::LimeMode => Vec::new(),
                    _ => lists
                        .iter()
                        .find(|(v, _)| *v == variant)
                        .map(|(_, l)| l.iter().map(|e| e.text.clone()).collect())
                        .unwrap_or_default(),
                },
            })
            .collect();

        Ok(DocRecord {
            doc_id: record.id.clone(),
            text: record.text.clone(),
            label: record.label.clone(),
            original_label: original.predicted_label().to_string(),
            original_score: original.score(target),
            explanations,
            deletions,
        })
    }
}

/// Evaluates every configured variant on `corpus`. Documents run in
/// parallel; the report does not depend on scheduling.
pub fn run_eval(
    corpus: &LabeledCorpus,
    model: &dyn BlackBox,
    model_id: &str,
    ontology: &Ontology,
    triplexes: &TriplexIndex,
    config: &EvalConfig,
) -> Result<EvalReport> {
    config.validate()?;
    if corpus.is_empty() {
        return Err(Error::Eval("empty corpus".into()));
    }
    let known: BTreeSet<&str> = model.labels().iter().map(String::as_str).collect();
    let unknown: Vec<&str> = corpus.label_set().difference(&known).copied().collect();
    if !unknown.is_empty() {
        return Err(Error::Eval(format!(
            "corpus labels {unknown:?} are not among the model's labels {:?}",
            model.labels()
        )));
    }
    let onml = Explainer::new(
        ontology,
        model,
        ExplainConfig {
            lime_mode: false,
            ..config.explain.clone()
        },
    );
    let lime = Explainer::new(
        ontology,
        model,
        ExplainConfig {
            lime_mode: true,
            ..config.explain.clone()
        },
    );
    let job = DocEval {
        onml: &onml,
        lime: &lime,
        triplexes,
        config,
    };
    let documents: Vec<DocRecord> = corpus
        .records()
        .par_iter()
        .enumerate()
        .map(|(i, r)| job.run(r, config.seed.wrapping_add(i as u64)))
        .collect::<Result<_>>()?;

    let n = documents.len() as f64;
    let original_accuracy = documents.iter().filter(|d| d.original_label == d.label).count() as f64 / n;
    let mut aggregates = Vec::new();
    for &variant in &config.variants {
        for &k in &config.top_k {
            let rows: Vec<(&DocRecord, &Deletion)> = documents
                .iter()
                .map(|d| {
                    let del = d
                        .deletions
                        .iter()
                        .find(|x| x.variant == variant && x.k == k)
                        .expect("every doc has every deletion");
                    (d, del)
                })
                .collect();
            let updated_accuracy =
                rows.iter().filter(|(d, x)| x.updated_label == d.label).count() as f64 / n;
            let sc = rows.iter().map(|(_, x)| x.ic).sum::<f64>() / n;
            let ac = original_accuracy - updated_accuracy;
            aggregates.push(Aggregate {
                variant,
                k,
                docs: documents.len(),
                original_accuracy,
                updated_accuracy,
                ac,
                ac_percent: 100.0 * ac,
                sc,
                sc_percent: 100.0 * sc,
            });
        }
    }

    Ok(EvalReport {
        format: REPORT_FORMAT.into(),
        version: REPORT_VERSION,
        ontology: ontology.name().to_string(),
        model: model_id.to_string(),
        config: config.clone(),
        aggregates,
        documents,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Structured,
    Table,
    Html,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "structured" | "json" => Ok(ReportFormat::Structured),
            "table" => Ok(ReportFormat::Table),
            "html" => Ok(ReportFormat::Html),
            _ => Err(Error::Eval(format!("unknown report format {s:?}"))),
        }
    }
}

pub fn render_table(report: &EvalReport) -> String {
    let mut out = format!(
        "{:<14} {:>3} {:>9} {:>8} {:>11} {:>8}\n",
        "variant", "k", "AC", "AC%", "SC", "SC%"
    );
    for a in &report.aggregates {
        let _ = writeln!(
            out,
            "{:<14} {:>3} {:>9.4} {:>8.2} {:>11.6} {:>8.2}",
            a.variant.name(),
            a.k,
            a.ac,
            a.ac_percent,
            a.sc,
            a.sc_percent
        );
    }
    out
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            _ => out.push(c),
        }
    }
    out
}

fn highlight(text: &str, spans: &[[usize; 2]]) -> String {
    let mut out = String::new();
    let mut cursor = 0;
    for &[a, b] in spans {
        out.push_str(&escape(&text[cursor..a]));
        out.push_str("<mark>");
        out.push_str(&escape(&text[a..b]));
        out.push_str("</mark>");
        cursor = b;
    }
    out.push_str(&escape(&text[cursor..]));
    out
}

pub fn render_html(report: &EvalReport) -> String {
    let mut out = String::from(
        "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n<title>Explanation evaluation</title>\n\
         <style>body{font-family:sans-serif;max-width:60em;margin:auto}mark{background:#fd6}\
         td,th{padding:0 .6em;text-align:right}td:first-child{text-align:left}</style>\n</head>\n<body>\n",
    );
    let _ = writeln!(
        out,
        "<h1>Explanation evaluation</h1>\n<p>ontology {} &middot; model {}</p>",
        escape(&report.ontology),
        escape(&report.model)
    );
    out.push_str("<table>\n<tr><th>variant</th><th>k</th><th>AC%</th><th>SC%</th></tr>\n");
    for a in &report.aggregates {
        let _ = writeln!(
            out,
            "<tr><td>{}</td><td>{}</td><td>{:.2}</td><td>{:.2}</td></tr>",
            a.variant, a.k, a.ac_percent, a.sc_percent
        );
    }
    out.push_str("</table>\n");
    for d in &report.documents {
        let _ = writeln!(
            out,
            "<section>\n<h2>{}</h2>\n<p>label {} &middot; predicted {} ({:.4})</p>",
            escape(&d.doc_id),
            escape(&d.label),
            escape(&d.original_label),
            d.original_score
        );
        for x in &d.deletions {
            let _ = writeln!(
                out,
                "<p><b>{} k={}</b> &rarr; {} (IC {:.4})<br>{}</p>",
                x.variant,
                x.k,
                escape(&x.updated_label),
                x.ic,
                highlight(&d.text, &x.deleted_spans)
            );
        }
        out.push_str("</section>\n");
    }
    out.push_str("</body>\n</html>\n");
    out
}

pub fn render_report(report: &EvalReport, format: ReportFormat) -> Result<String> {
    Ok(match format {
        ReportFormat::Structured => serde_json::to_string_pretty(report)? + "\n",
        ReportFormat::Table => render_table(report),
        ReportFormat::Html => render_html(report),
    })
}

pub fn emit_report(report: &EvalReport, format: ReportFormat, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, render_report(report, format)?).map_err(|e| Error::io(path, e))
}

pub fn load_report(path: impl AsRef<Path>) -> Result<EvalReport> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let report: EvalReport = serde_json::from_str(&text)?;
    if report.format != REPORT_FORMAT || report.version != REPORT_VERSION {
        return Err(Error::Eval(format!(
            "unsupported report {} v{}",
            report.format, report.version
        )));
    }
    Ok(report)
}
