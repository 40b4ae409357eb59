//! Tokenization, sentence segmentation, ontology-term matching and the
//! in-sentence distance used by the contextual constraint.
//!
//! Tokens are maximal runs of alphanumeric characters; a single `'`, `’`,
//! `-`, `_` or `.` between two alphanumerics is kept inside the token
//! (`don't`, `e-mail`, `3.5`). Everything else is a boundary and is not part
//! of any token. A sentence ends after `.`, `!` or `?` when the next
//! character is whitespace or the end of the text.
//!
//! Distances count *content* positions: stopwords are skipped, so in
//! "she knows that smoke causes addiction and headache" the distance between
//! `smoke` and `headache` is 3, not 4.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ontology::Ontology;

const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords.txt");

/// A set of lowercase stopwords.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stopwords(HashSet<String>);

impl Stopwords {
    /// The list shipped with the crate (`data/stopwords.txt`).
    pub fn builtin() -> Self {
        Self::parse(DEFAULT_STOPWORDS)
    }

    pub fn empty() -> Self {
        Stopwords(HashSet::new())
    }

    /// One token per line; `#` starts a comment line.
    pub fn parse(text: &str) -> Self {
        Stopwords(parse_word_list(text).into_iter().collect())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(&text))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(word)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Sorted word list, for persistence.
    pub fn to_sorted_vec(&self) -> Vec<String> {
        let mut words: Vec<String> = self.0.iter().cloned().collect();
        words.sort();
        words
    }
}

impl Default for Stopwords {
    fn default() -> Self {
        Self::builtin()
    }
}

impl<S: Into<String>> FromIterator<S> for Stopwords {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Stopwords(iter.into_iter().map(|s| s.into().to_lowercase()).collect())
    }
}

/// Parses a one-entry-per-line lexicon file, lowercasing entries and
/// skipping blank lines and `#` comments.
pub(crate) fn parse_word_list(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub norm: String,
    pub sent_idx: usize,
    /// Position within the sentence over all tokens.
    pub word_idx: usize,
    /// Position within the sentence over non-stopword tokens.
    pub content_idx: Option<usize>,
    /// Byte range into the original text.
    pub char_span: Range<usize>,
}

impl Token {
    pub fn is_stopword(&self) -> bool {
        self.content_idx.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizedDoc {
    pub text: String,
    pub tokens: Vec<Token>,
    pub sentence_count: usize,
    sentences: Vec<Range<usize>>,
}

/// A contiguous, non-empty token range inside one sentence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct UnitSpan {
    pub start: usize,
    pub end: usize,
    pub sentence: usize,
    /// Normalized tokens joined by single spaces.
    pub phrase: String,
}

impl UnitSpan {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }

    pub fn range(&self) -> Range<usize> {
        self.start..self.end
    }

    pub fn contains(&self, token: usize) -> bool {
        self.range().contains(&token)
    }
}

impl fmt::Display for UnitSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.phrase)
    }
}

/// In-sentence distance between two spans.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Distance {
    Finite(usize),
    /// The spans lie in different sentences.
    Infinite,
}

impl Distance {
    pub fn within(self, gamma: usize) -> bool {
        matches!(self, Distance::Finite(d) if d <= gamma)
    }
}

fn is_connector(c: char) -> bool {
    matches!(c, '\'' | '\u{2019}' | '-' | '_' | '.')
}

/// Byte ranges of the words in `text`.
pub fn word_spans(text: &str) -> Vec<Range<usize>> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut spans = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if !chars[i].1.is_alphanumeric() {
            i += 1;
            continue;
        }
        let start = chars[i].0;
        let mut j = i + 1;
        loop {
            if j < chars.len() && chars[j].1.is_alphanumeric() {
                j += 1;
            } else if j + 1 < chars.len()
                && is_connector(chars[j].1)
                && chars[j + 1].1.is_alphanumeric()
            {
                j += 2;
            } else {
                break;
            }
        }
        let end = chars.get(j).map_or(text.len(), |c| c.0);
        spans.push(start..end);
        i = j;
    }
    spans
}

/// Lowercased words of `text`, as the tokenizer would produce them.
pub fn normalize_words(text: &str) -> Vec<String> {
    word_spans(text)
        .into_iter()
        .map(|r| text[r].to_lowercase())
        .collect()
}

fn sentence_ends(text: &str) -> Vec<usize> {
    let mut ends = Vec::new();
    let mut it = text.char_indices().peekable();
    while let Some((i, c)) = it.next() {
        if matches!(c, '.' | '!' | '?') {
            match it.peek() {
                None => ends.push(i + c.len_utf8()),
                Some(&(_, next)) if next.is_whitespace() => ends.push(i + c.len_utf8()),
                _ => {}
            }
        }
    }
    ends
}

pub fn tokenize(text: &str, stopwords: &Stopwords) -> TokenizedDoc {
    let ends = sentence_ends(text);
    let mut tokens: Vec<Token> = Vec::new();
    let mut sentences: Vec<Range<usize>> = Vec::new();
    // Index into `ends` of the boundary that closes the current raw sentence.
    let mut boundary = 0;
    let mut current_raw: Option<usize> = None;
    let (mut word_idx, mut content_idx) = (0, 0);

    for span in word_spans(text) {
        while boundary < ends.len() && ends[boundary] <= span.start {
            boundary += 1;
        }
        if current_raw != Some(boundary) {
            current_raw = Some(boundary);
            if let Some(last) = sentences.last_mut() {
                last.end = tokens.len();
            }
            sentences.push(tokens.len()..tokens.len());
            word_idx = 0;
            content_idx = 0;
        }
        let surface = text[span.clone()].to_string();
        let norm = surface.to_lowercase();
        let content = if stopwords.contains(&norm) {
            None
        } else {
            content_idx += 1;
            Some(content_idx - 1)
        };
        tokens.push(Token {
            surface,
            norm,
            sent_idx: sentences.len() - 1,
            word_idx,
            content_idx: content,
            char_span: span,
        });
        word_idx += 1;
    }
    if let Some(last) = sentences.last_mut() {
        last.end = tokens.len();
    }
    TokenizedDoc {
        text: text.to_string(),
        sentence_count: sentences.len(),
        tokens,
        sentences,
    }
}

impl TokenizedDoc {
    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Token index range of sentence `s`.
    pub fn sentence(&self, s: usize) -> Range<usize> {
        self.sentences[s].clone()
    }

    pub fn sentences(&self) -> impl Iterator<Item = Range<usize>> + '_ {
        self.sentences.iter().cloned()
    }

    pub fn norms(&self, range: Range<usize>) -> impl Iterator<Item = &str> {
        self.tokens[range].iter().map(|t| t.norm.as_str())
    }

    /// Builds a span over `range`. Panics if the range is empty or crosses
    /// a sentence boundary.
    pub fn span(&self, range: Range<usize>) -> UnitSpan {
        assert!(range.start < range.end && range.end <= self.tokens.len());
        let sentence = self.tokens[range.start].sent_idx;
        assert_eq!(
            sentence,
            self.tokens[range.end - 1].sent_idx,
            "span crosses a sentence boundary"
        );
        UnitSpan {
            start: range.start,
            end: range.end,
            sentence,
            phrase: self.norms(range).collect::<Vec<_>>().join(" "),
        }
    }

    /// Verbatim text from the first token's start to the last token's end.
    pub fn text_of(&self, range: Range<usize>) -> &str {
        if range.is_empty() {
            return "";
        }
        let from = self.tokens[range.start].char_span.start;
        let to = self.tokens[range.end - 1].char_span.end;
        &self.text[from..to]
    }

    /// The text with the given tokens' character spans removed and runs of
    /// whitespace collapsed to one space. Deleting nothing returns the text
    /// unchanged.
    pub fn delete_tokens(&self, deleted: &BTreeSet<usize>) -> String {
        if deleted.is_empty() {
            return self.text.clone();
        }
        let mut kept = String::with_capacity(self.text.len());
        let mut cursor = 0;
        for &i in deleted {
            let span = &self.tokens[i].char_span;
            kept.push_str(&self.text[cursor..span.start]);
            kept.push(' ');
            cursor = span.end;
        }
        kept.push_str(&self.text[cursor..]);
        kept.split_whitespace().collect::<Vec<_>>().join(" ")
    }

    /// Content index of the first non-stopword token in `span`.
    pub fn anchor_position(&self, span: &UnitSpan) -> Option<usize> {
        self.tokens[span.range()].iter().find_map(|t| t.content_idx)
    }
}

/// Greedy longest-match of ontology terms, left to right, within each
/// sentence. Returns each matched span together with the indices of every
/// concept whose lexicon holds the phrase.
pub(crate) fn match_spans<'o>(doc: &TokenizedDoc, o: &'o Ontology) -> Vec<(UnitSpan, &'o [usize])> {
    let max_len = o.max_term_tokens();
    let mut out = Vec::new();
    for sentence in doc.sentences() {
        let mut i = sentence.start;
        while i < sentence.end {
            let longest = (1..=max_len.min(sentence.end - i)).rev().find_map(|len| {
                let phrase = doc.norms(i..i + len).collect::<Vec<_>>().join(" ");
                o.concept_indices(&phrase).map(|c| (len, c))
            });
            match longest {
                Some((len, concepts)) => {
                    out.push((doc.span(i..i + len), concepts));
                    i += len;
                }
                None => i += 1,
            }
        }
    }
    out
}

/// Every ontology-term occurrence in `doc`, paired with each concept whose
/// lexicon contains it.
pub fn match_terms(doc: &TokenizedDoc, o: &Ontology) -> Vec<(UnitSpan, String)> {
    match_spans(doc, o)
        .into_iter()
        .flat_map(|(span, concepts)| {
            concepts
                .iter()
                .map(move |&c| (span.clone(), o.concepts()[c].id.clone()))
        })
        .collect()
}

/// Distance between two spans in content positions, each span anchored at
/// its first non-stopword token.
pub fn lambda_distance(doc: &TokenizedDoc, a: &UnitSpan, b: &UnitSpan) -> Result<Distance> {
    let pa = doc
        .anchor_position(a)
        .ok_or_else(|| Error::StopwordSpan(a.phrase.clone()))?;
    let pb = doc
        .anchor_position(b)
        .ok_or_else(|| Error::StopwordSpan(b.phrase.clone()))?;
    if a.sentence != b.sentence {
        return Ok(Distance::Infinite);
    }
    Ok(Distance::Finite(pa.abs_diff(pb)))
}
