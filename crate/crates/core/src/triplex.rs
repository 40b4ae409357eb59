//! (subject, predicate, object) triplexes: loading Open-IE output, locating
//! the arguments in a document, and a lexicon-based fallback extractor.
//!
//! Triplex files hold one JSON record per line:
//!
//! ```text
//! {"doc_id": "c1", "subject": "a letter", "predicate": "denied", "object": "mitigation application", "confidence": 0.82}
//! ```

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textproc::{normalize_words, parse_word_list, TokenizedDoc, UnitSpan};

pub const DEFAULT_MIN_CONFIDENCE: f64 = 0.7;

/// Confidence given to every built-in extraction.
pub const BUILTIN_CONFIDENCE: f64 = 0.5;

const VERBS: &str = include_str!("../data/verbs.txt");

/// Longest subject or object chunk the built-in extractor takes.
const MAX_CHUNK: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Triplex {
    pub doc_id: String,
    pub subject: String,
    pub predicate: String,
    pub object: String,
    pub confidence: f64,
}

impl Triplex {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.confidence) {
            return Err(Error::Validation(format!(
                "confidence {} outside [0, 1]",
                self.confidence
            )));
        }
        Ok(())
    }
}

impl std::fmt::Display for Triplex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}; {}; {}", self.subject, self.predicate, self.object)
    }
}

/// Triplexes grouped by document id, in file order within a document.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TriplexIndex {
    by_doc: BTreeMap<String, Vec<Triplex>>,
}

impl TriplexIndex {
    /// Keeps only triplexes with confidence strictly above `min_confidence`.
    pub fn from_triplexes(
        triplexes: impl IntoIterator<Item = Triplex>,
        min_confidence: f64,
    ) -> Self {
        let mut by_doc: BTreeMap<String, Vec<Triplex>> = BTreeMap::new();
        for t in triplexes {
            if t.confidence > min_confidence {
                by_doc.entry(t.doc_id.clone()).or_default().push(t);
            }
        }
        TriplexIndex { by_doc }
    }

    pub fn get(&self, doc_id: &str) -> &[Triplex] {
        self.by_doc.get(doc_id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn len(&self) -> usize {
        self.by_doc.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.by_doc.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Triplex> {
        self.by_doc.values().flatten()
    }
}

pub fn parse_triplexes(text: &str, min_confidence: f64) -> Result<TriplexIndex> {
    let mut all = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse {
            line: n + 1,
            message,
        };
        let t: Triplex = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
        t.validate().map_err(|e| err(e.to_string()))?;
        all.push(t);
    }
    Ok(TriplexIndex::from_triplexes(all, min_confidence))
}

pub fn load_triplexes(path: impl AsRef<Path>, min_confidence: f64) -> Result<TriplexIndex> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_triplexes(&text, min_confidence)
}

/// A triplex whose three arguments were found in one sentence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignedTriplex {
    pub triplex: Triplex,
    pub sentence: usize,
    pub subject: UnitSpan,
    pub predicate: UnitSpan,
    pub object: UnitSpan,
}

impl AlignedTriplex {
    pub fn tokens(&self) -> impl Iterator<Item = usize> + '_ {
        self.subject
            .range()
            .chain(self.predicate.range())
            .chain(self.object.range())
    }
}

fn find_in(doc: &TokenizedDoc, range: std::ops::Range<usize>, words: &[String]) -> Option<UnitSpan> {
    if words.is_empty() || words.len() > range.len() {
        return None;
    }
    (range.start..=range.end - words.len())
        .find(|&i| doc.norms(i..i + words.len()).eq(words.iter().map(String::as_str)))
        .map(|i| doc.span(i..i + words.len()))
}

/// Places each argument at its first occurrence in the first sentence that
/// contains all three. `None` when no sentence does.
pub fn align_triplex(doc: &TokenizedDoc, t: &Triplex) -> Option<AlignedTriplex> {
    let args = [&t.subject, &t.predicate, &t.object].map(|a| normalize_words(a));
    (0..doc.sentence_count).find_map(|s| {
        let range = doc.sentence(s);
        let [subject, predicate, object] =
            [0, 1, 2].map(|i| find_in(doc, range.clone(), &args[i]));
        Some(AlignedTriplex {
            triplex: t.clone(),
            sentence: s,
            subject: subject?,
            predicate: predicate?,
            object: object?,
        })
    })
}

/// Aligns every triplex, logging and dropping the ones that do not fit.
pub fn align_all(doc: &TokenizedDoc, triplexes: &[Triplex]) -> Vec<AlignedTriplex> {
    triplexes
        .iter()
        .filter_map(|t| {
            let aligned = align_triplex(doc, t);
            if aligned.is_none() {
                log::warn!("triplex ({t}) for {:?} does not align to one sentence", t.doc_id);
            }
            aligned
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerbLexicon(HashSet<String>);

impl VerbLexicon {
    pub fn builtin() -> Self {
        VerbLexicon(parse_word_list(VERBS).into_iter().collect())
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(word)
    }
}

impl Default for VerbLexicon {
    fn default() -> Self {
        Self::builtin()
    }
}

/// Naive extraction: each run of verb-lexicon words is a predicate; up to
/// four words on either side, not crossing another verb, form the subject
/// and object. Both need at least one non-stopword.
pub fn extract_builtin(doc: &TokenizedDoc, doc_id: &str, verbs: &VerbLexicon) -> Vec<Triplex> {
    let mut out = Vec::new();
    let join = |r: std::ops::Range<usize>| {
        doc.tokens[r]
            .iter()
            .map(|t| t.surface.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    };
    let has_content = |r: &std::ops::Range<usize>| doc.tokens[r.clone()].iter().any(|t| !t.is_stopword());
    for sentence in doc.sentences() {
        let is_verb = |i: usize| verbs.contains(&doc.tokens[i].norm);
        let mut runs = Vec::new();
        let mut i = sentence.start;
        while i < sentence.end {
            if is_verb(i) {
                let start = i;
                while i < sentence.end && is_verb(i) {
                    i += 1;
                }
                runs.push(start..i);
            } else {
                i += 1;
            }
        }
        for (k, run) in runs.iter().enumerate() {
            let left_limit = if k == 0 { sentence.start } else { runs[k - 1].end };
            let right_limit = runs.get(k + 1).map_or(sentence.end, |r| r.start);
            let subject = run.start.saturating_sub(MAX_CHUNK).max(left_limit)..run.start;
            let object = run.end..(run.end + MAX_CHUNK).min(right_limit);
            if has_content(&subject) && has_content(&object) {
                out.push(Triplex {
                    doc_id: doc_id.to_string(),
                    subject: join(subject),
                    predicate: join(run.clone()),
                    object: join(object),
                    confidence: BUILTIN_CONFIDENCE,
                });
            }
        }
    }
    out
}
