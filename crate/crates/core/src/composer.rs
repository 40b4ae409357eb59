//! Turns tuples, anchors and triplexes into final explanations.
//!
//! Tuples of one sentence are merged into ontology explanations by four
//! rules, applied in order until none fires:
//!
//! * (a) `(k, l)`, `(k, m)` with `l`, `m` of one concept → `{k, l and/or m}`
//! * (b) `(k, m)`, `(l, m)` with `k`, `l` of one concept → `{k and/or l, m}`
//! * (c) `(k, l)`, `(l, m)` → `{k, l, m}`
//! * (d) an explanation whose words all occur in another is absorbed by it,
//!   so `(k, l)`, `(l, m)`, `(k, m)` end as `{k, l, m}`
//!
//! Causal connectives lying between the words are then added. Finally each
//! sentence yields the verbatim span from the first to the last position of
//! its explanation words, anchor and triplexes; a sentence with an anchor but
//! no tuples yields the anchor alone.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::anchors::Anchor;
use crate::error::Result;
use crate::surrogate::SpanScorer;
use crate::textproc::{TokenizedDoc, UnitSpan};
use crate::triplex::AlignedTriplex;
use crate::tuples::OntologyTuple;

pub const CAUSAL_WORDS: [&str; 14] = [
    "because",
    "since",
    "therefore",
    "while",
    "whereas",
    "thus",
    "thereby",
    "meanwhile",
    "however",
    "hence",
    "otherwise",
    "consequently",
    "when",
    "whenever",
];

/// Alternative spans filling one position of an explanation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slot {
    pub spans: Vec<UnitSpan>,
    pub concepts: BTreeSet<String>,
}

impl Slot {
    fn start(&self) -> usize {
        self.spans[0].start
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OntologyExplanation {
    pub sentence: usize,
    pub slots: Vec<Slot>,
    /// Causal connectives added between the words.
    pub causal: Vec<UnitSpan>,
    pub tuples: Vec<OntologyTuple>,
}

impl OntologyExplanation {
    pub fn from_tuple(t: &OntologyTuple) -> Self {
        let slot = |span: &UnitSpan, concept: &str| Slot {
            spans: vec![span.clone()],
            concepts: BTreeSet::from([concept.to_string()]),
        };
        OntologyExplanation {
            sentence: t.sentence(),
            slots: vec![
                slot(&t.first, &t.source_concept),
                slot(&t.second, &t.target_concept),
            ],
            causal: Vec::new(),
            tuples: vec![t.clone()],
        }
    }

    fn spans(&self) -> impl Iterator<Item = &UnitSpan> {
        self.slots.iter().flat_map(|s| s.spans.iter())
    }

    /// Token indices of every word, causal connectives included.
    pub fn tokens(&self) -> BTreeSet<usize> {
        self.spans()
            .chain(&self.causal)
            .flat_map(UnitSpan::range)
            .collect()
    }

    /// Words in text order; alternatives within a slot joined by `and/or`.
    pub fn words(&self) -> Vec<String> {
        let mut items: Vec<(usize, String)> = self
            .slots
            .iter()
            .map(|s| {
                let alts: Vec<&str> = s.spans.iter().map(|p| p.phrase.as_str()).collect();
                (s.start(), alts.join(" and/or "))
            })
            .chain(self.causal.iter().map(|c| (c.start, c.phrase.clone())))
            .collect();
        items.sort();
        items.into_iter().map(|(_, w)| w).collect()
    }

    /// `{smoke, addiction and/or headache}`
    pub fn render(&self) -> String {
        format!("{{{}}}", self.words().join(", "))
    }
}

fn span_set(e: &OntologyExplanation) -> BTreeSet<(usize, usize)> {
    e.spans().map(|s| (s.start, s.end)).collect()
}

fn union_slot(a: &Slot, b: &Slot, concepts: BTreeSet<String>) -> Slot {
    let mut spans: Vec<UnitSpan> = a.spans.iter().chain(&b.spans).cloned().collect();
    spans.sort();
    spans.dedup();
    Slot { spans, concepts }
}

fn shares_concept(a: &Slot, b: &Slot) -> BTreeSet<String> {
    a.concepts.intersection(&b.concepts).cloned().collect()
}

fn join_tuples(a: &OntologyExplanation, b: &OntologyExplanation) -> Vec<OntologyTuple> {
    let mut t: Vec<OntologyTuple> = a.tuples.iter().chain(&b.tuples).cloned().collect();
    t.sort();
    t.dedup();
    t
}

fn rule_simplify(a: &OntologyExplanation, b: &OntologyExplanation, shared: usize) -> Option<OntologyExplanation> {
    if a.slots.len() != 2 || b.slots.len() != 2 {
        return None;
    }
    let other = 1 - shared;
    if a.slots[shared].spans != b.slots[shared].spans {
        return None;
    }
    let common = shares_concept(&a.slots[other], &b.slots[other]);
    if common.is_empty() {
        return None;
    }
    let shared_concepts = a.slots[shared]
        .concepts
        .union(&b.slots[shared].concepts)
        .cloned()
        .collect();
    let mut slots = vec![
        union_slot(&a.slots[shared], &b.slots[shared], shared_concepts),
        union_slot(&a.slots[other], &b.slots[other], common),
    ];
    if shared == 1 {
        slots.swap(0, 1);
    }
    Some(OntologyExplanation {
        sentence: a.sentence,
        slots,
        causal: Vec::new(),
        tuples: join_tuples(a, b),
    })
}

fn rule_chain(a: &OntologyExplanation, b: &OntologyExplanation) -> Option<OntologyExplanation> {
    if a.slots.last()?.spans != b.slots[0].spans {
        return None;
    }
    let seen = span_set(a);
    if b.slots[1..]
        .iter()
        .flat_map(|s| &s.spans)
        .any(|s| seen.contains(&(s.start, s.end)))
    {
        return None;
    }
    let mut slots = a.slots.clone();
    let last = slots.len() - 1;
    slots[last].concepts = slots[last].concepts.union(&b.slots[0].concepts).cloned().collect();
    slots.extend(b.slots[1..].iter().cloned());
    Some(OntologyExplanation {
        sentence: a.sentence,
        slots,
        causal: Vec::new(),
        tuples: join_tuples(a, b),
    })
}

fn rule_absorb(a: &OntologyExplanation, b: &OntologyExplanation) -> Option<OntologyExplanation> {
    if !span_set(b).is_subset(&span_set(a)) {
        return None;
    }
    let mut merged = a.clone();
    merged.tuples = join_tuples(a, b);
    Some(merged)
}

type Rule<'r> = &'r dyn Fn(&OntologyExplanation, &OntologyExplanation) -> Option<OntologyExplanation>;

/// One merge step: the first rule, in order, that fires on any pair.
fn merge_step(expls: &[OntologyExplanation]) -> Option<(usize, usize, OntologyExplanation)> {
    let n = expls.len();
    let pairs = || (0..n).flat_map(move |i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)));
    let rules: [Rule; 4] = [
        &|a, b| rule_simplify(a, b, 0),
        &|a, b| rule_simplify(a, b, 1),
        &rule_chain,
        &rule_absorb,
    ];
    rules.iter().find_map(|rule| {
        pairs().find_map(|(i, j)| rule(&expls[i], &expls[j]).map(|m| (i, j, m)))
    })
}

/// Merges the tuples of one sentence. The result does not depend on the
/// input order: tuples are sorted first and pairs with the same two spans
/// are combined.
pub fn merge_tuples(tuples: &[OntologyTuple]) -> Vec<OntologyExplanation> {
    let mut by_pair: BTreeMap<(&UnitSpan, &UnitSpan), Vec<&OntologyTuple>> = BTreeMap::new();
    for t in tuples {
        by_pair.entry((&t.first, &t.second)).or_default().push(t);
    }
    let mut expls: Vec<OntologyExplanation> = by_pair
        .into_values()
        .map(|group| {
            let mut e = OntologyExplanation::from_tuple(group[0]);
            for t in &group[1..] {
                e.slots[0].concepts.insert(t.source_concept.clone());
                e.slots[1].concepts.insert(t.target_concept.clone());
                e.tuples.push((*t).clone());
            }
            e.tuples.sort();
            e.tuples.dedup();
            e
        })
        .collect();
    while let Some((i, j, merged)) = merge_step(&expls) {
        expls[i] = merged;
        expls.remove(j);
    }
    expls.sort_by_key(|e| (e.sentence, e.tokens().into_iter().next()));
    expls
}

/// Adds causal connectives lying strictly between the first and last word.
pub fn insert_causal(doc: &TokenizedDoc, expl: &OntologyExplanation) -> OntologyExplanation {
    let tokens = expl.tokens();
    let mut out = expl.clone();
    let (Some(&lo), Some(&hi)) = (tokens.first(), tokens.last()) else {
        return out;
    };
    for t in lo + 1..hi {
        if !tokens.contains(&t) && CAUSAL_WORDS.contains(&doc.tokens[t].norm.as_str()) {
            out.causal.push(doc.span(t..t + 1));
        }
    }
    out
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub ontology: Vec<String>,
    pub tuples: Vec<String>,
    pub anchor: Option<String>,
    pub triplexes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub sentence: usize,
    /// Token range `[start, end)`.
    pub start: usize,
    pub end: usize,
    /// Byte range of `text` in the document.
    pub char_start: usize,
    pub char_end: usize,
    pub text: String,
    pub score: f64,
    pub rank: usize,
    pub provenance: Provenance,
}

impl Explanation {
    pub fn tokens(&self) -> std::ops::Range<usize> {
        self.start..self.end
    }
}

/// Which evidence opens an explanation for a sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Primary {
    Ontology,
    Triplex,
}

fn compose_with(
    doc: &TokenizedDoc,
    onto: &[OntologyExplanation],
    anchors: &[Anchor],
    triplexes: &[AlignedTriplex],
    scorer: &dyn SpanScorer,
    primary: Primary,
) -> Result<Vec<Explanation>> {
    let mut drafts = Vec::new();
    for s in 0..doc.sentence_count {
        let expls: Vec<&OntologyExplanation> = match primary {
            Primary::Ontology => onto.iter().filter(|e| e.sentence == s).collect(),
            Primary::Triplex => Vec::new(),
        };
        let trips: Vec<&AlignedTriplex> = triplexes.iter().filter(|t| t.sentence == s).collect();
        let anchor = anchors.iter().find(|a| a.sentence == s);
        let opened = match primary {
            Primary::Ontology => !expls.is_empty(),
            Primary::Triplex => !trips.is_empty(),
        };
        let mut provenance = Provenance::default();
        let mut positions = BTreeSet::new();
        if opened {
            for e in &expls {
                positions.extend(e.tokens());
                provenance.ontology.push(e.render());
                provenance.tuples.extend(e.tuples.iter().map(ToString::to_string));
            }
            for t in &trips {
                positions.extend(t.tokens());
                provenance.triplexes.push(t.triplex.to_string());
            }
        }
        if let Some(a) = anchor {
            positions.extend(a.span.range());
            provenance.anchor = Some(a.text.clone());
        }
        if !opened && anchor.is_none() {
            continue;
        }
        let (&lo, &hi) = (positions.first().expect("nonempty"), positions.last().expect("nonempty"));
        let range = lo..hi + 1;
        drafts.push(Explanation {
            sentence: s,
            start: range.start,
            end: range.end,
            char_start: doc.tokens[lo].char_span.start,
            char_end: doc.tokens[hi].char_span.end,
            text: doc.text_of(range).to_string(),
            score: 0.0,
            rank: 0,
            provenance,
        });
    }
    let spans: Vec<Vec<usize>> = drafts.iter().map(|d| d.tokens().collect()).collect();
    let scores = scorer.score_spans(&spans)?;
    for (d, score) in drafts.iter_mut().zip(scores) {
        d.score = score;
    }
    drafts.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.sentence.cmp(&b.sentence)));
    for (i, d) in drafts.iter_mut().enumerate() {
        d.rank = i + 1;
    }
    Ok(drafts)
}

/// One explanation per sentence that has ontology explanations or an
/// anchor, best score first.
pub fn compose(
    doc: &TokenizedDoc,
    onto: &[OntologyExplanation],
    anchors: &[Anchor],
    triplexes: &[AlignedTriplex],
    scorer: &dyn SpanScorer,
) -> Result<Vec<Explanation>> {
    compose_with(doc, onto, anchors, triplexes, scorer, Primary::Ontology)
}

/// Like [`compose`], with aligned triplexes in place of ontology
/// explanations.
pub fn compose_triplex_only(
    doc: &TokenizedDoc,
    anchors: &[Anchor],
    triplexes: &[AlignedTriplex],
    scorer: &dyn SpanScorer,
) -> Result<Vec<Explanation>> {
    compose_with(doc, &[], anchors, triplexes, scorer, Primary::Triplex)
}
