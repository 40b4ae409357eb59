//! Anchor texts: per sentence, the highest-scoring phrase that starts at a
//! seed word and grows rightward one word at a time.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::surrogate::SpanScorer;
use crate::textproc::{normalize_words, parse_word_list, TokenizedDoc, UnitSpan};

const BUILTIN: &str = include_str!("../data/anchors.txt");

/// Seed phrases, stored as normalized word sequences.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnchorSeedSet {
    seeds: Vec<Vec<String>>,
}

impl AnchorSeedSet {
    /// `not, no, illegal, against, without`.
    pub fn builtin() -> Self {
        Self::parse(BUILTIN).expect("shipped seed list is valid")
    }

    pub fn new<S: AsRef<str>>(phrases: &[S]) -> Result<Self> {
        let mut seeds: Vec<Vec<String>> = Vec::new();
        for p in phrases {
            let words = normalize_words(p.as_ref());
            if words.is_empty() {
                return Err(Error::Validation(format!(
                    "anchor seed {:?} has no words",
                    p.as_ref()
                )));
            }
            if !seeds.contains(&words) {
                seeds.push(words);
            }
        }
        if seeds.is_empty() {
            return Err(Error::Validation("anchor seed list is empty".into()));
        }
        Ok(AnchorSeedSet { seeds })
    }

    /// One phrase per line, `#` comments.
    pub fn parse(text: &str) -> Result<Self> {
        Self::new(&parse_word_list(text))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn phrases(&self) -> Vec<String> {
        self.seeds.iter().map(|s| s.join(" ")).collect()
    }

    /// Start and length of every seed occurrence in `range`, by start,
    /// shorter seeds first.
    pub fn occurrences(
        &self,
        doc: &TokenizedDoc,
        range: std::ops::Range<usize>,
    ) -> Vec<(usize, usize)> {
        let mut found = BTreeSet::new();
        for i in range.clone() {
            for seed in &self.seeds {
                let end = i + seed.len();
                if end <= range.end && doc.norms(i..end).eq(seed.iter().map(String::as_str)) {
                    found.insert((i, seed.len()));
                }
            }
        }
        found.into_iter().collect()
    }
}

impl Default for AnchorSeedSet {
    fn default() -> Self {
        Self::builtin()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    pub sentence: usize,
    pub span: UnitSpan,
    /// Verbatim text of the span.
    pub text: String,
    pub score: f64,
}

/// Every candidate of `sentence`: for each seed occurrence, the prefixes
/// from the seed alone up to the end of the sentence. Ordered by occurrence,
/// then length; ranges shared by overlapping seeds appear once.
pub fn anchor_candidates(
    doc: &TokenizedDoc,
    seeds: &AnchorSeedSet,
    sentence: usize,
) -> Vec<std::ops::Range<usize>> {
    let range = doc.sentence(sentence);
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (start, len) in seeds.occurrences(doc, range.clone()) {
        for end in start + len..=range.end {
            if seen.insert((start, end)) {
                out.push(start..end);
            }
        }
    }
    out
}

/// At most one anchor per sentence that contains a seed: the candidate with
/// the highest score. Ties go to the earlier occurrence, then the shorter
/// phrase.
pub fn learn_anchors(
    doc: &TokenizedDoc,
    seeds: &AnchorSeedSet,
    scorer: &dyn SpanScorer,
) -> Result<Vec<Anchor>> {
    let mut anchors = Vec::new();
    for s in 0..doc.sentence_count {
        let candidates = anchor_candidates(doc, seeds, s);
        if candidates.is_empty() {
            continue;
        }
        let spans: Vec<Vec<usize>> = candidates.iter().map(|r| r.clone().collect()).collect();
        let scores = scorer.score_spans(&spans)?;
        let mut best = 0;
        for (i, &score) in scores.iter().enumerate() {
            if score > scores[best] {
                best = i;
            }
        }
        let range = candidates[best].clone();
        anchors.push(Anchor {
            sentence: s,
            text: doc.text_of(range.clone()).to_string(),
            span: doc.span(range),
            score: scores[best],
        });
    }
    Ok(anchors)
}
