//! Ontology-based tuples: ordered pairs of matched terms whose concepts are
//! linked `A ↦ B` and that sit within `gamma` content positions of each
//! other in the same sentence.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ontology::Ontology;
use crate::textproc::{lambda_distance, match_spans, Distance, TokenizedDoc, UnitSpan};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OntologyTuple {
    /// Term from the source concept.
    pub first: UnitSpan,
    /// Term from the target concept.
    pub second: UnitSpan,
    pub source_concept: String,
    pub target_concept: String,
    pub distance: usize,
}

impl OntologyTuple {
    pub fn sentence(&self) -> usize {
        self.first.sentence
    }
}

impl fmt::Display for OntologyTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.first.phrase, self.second.phrase)
    }
}

/// All ontology-based tuples in `doc`.
///
/// Output is sorted by sentence, then first-span position, then second-span
/// position (then concept ids), with exact duplicates removed. A span is
/// never paired with itself.
pub fn extract_tuples(doc: &TokenizedDoc, o: &Ontology, gamma: usize) -> Vec<OntologyTuple> {
    let matches: Vec<(UnitSpan, &[usize])> = match_spans(doc, o)
        .into_iter()
        .filter(|(span, _)| doc.anchor_position(span).is_some())
        .collect();

    let mut found = BTreeSet::new();
    for (i, (a, a_concepts)) in matches.iter().enumerate() {
        for (j, (b, b_concepts)) in matches.iter().enumerate() {
            if i == j || a.sentence != b.sentence {
                continue;
            }
            let Ok(Distance::Finite(d)) = lambda_distance(doc, a, b) else {
                continue;
            };
            if d > gamma {
                continue;
            }
            for &ca in *a_concepts {
                for &cb in *b_concepts {
                    if o.has_edge_idx(ca, cb) {
                        found.insert((
                            a.sentence,
                            a.start,
                            b.start,
                            OntologyTuple {
                                first: a.clone(),
                                second: b.clone(),
                                source_concept: o.concepts()[ca].id.clone(),
                                target_concept: o.concepts()[cb].id.clone(),
                                distance: d,
                            },
                        ));
                    }
                }
            }
        }
    }
    found.into_iter().map(|(_, _, _, t)| t).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textproc::{tokenize, Stopwords};

    const DRUG: &str = include_str!("../data/ontologies/drug_abuse.onto");
    const WORKED_TEXT: &str = "She uses orange juice and does not like weed. \
                              She knows that smoke causes addiction and headache.";

    fn pairs(tuples: &[OntologyTuple]) -> Vec<(String, String)> {
        tuples
            .iter()
            .map(|t| (t.first.phrase.clone(), t.second.phrase.clone()))
            .collect()
    }

    #[test]
    fn worked_example() {
        let o = Ontology::parse(DRUG).unwrap();
        let doc = tokenize(WORKED_TEXT, &Stopwords::builtin());
        let tuples = extract_tuples(&doc, &o, 3);
        assert_eq!(
            pairs(&tuples),
            vec![
                ("smoke".into(), "addiction".into()),
                ("smoke".into(), "headache".into())
            ]
        );
        assert_eq!(tuples[0].source_concept, "abuse_behavior");
        assert_eq!(tuples[0].target_concept, "side_effect");
        assert_eq!(tuples[1].target_concept, "symptom");
        assert_eq!(tuples[1].distance, 3);
    }

    #[test]
    fn gamma_zero_is_empty() {
        let o = Ontology::parse(DRUG).unwrap();
        let doc = tokenize(WORKED_TEXT, &Stopwords::builtin());
        assert!(extract_tuples(&doc, &o, 0).is_empty());
    }

    #[test]
    fn asymmetric_and_reverse_edge() {
        let o = Ontology::parse("[concepts]\na|A|x\nb|B|y\n[relations]\na|r|b\n").unwrap();
        let doc = tokenize("y x.", &Stopwords::empty());
        assert_eq!(pairs(&extract_tuples(&doc, &o, 5)), vec![("x".into(), "y".into())]);

        let both =
            Ontology::parse("[concepts]\na|A|x\nb|B|y\n[relations]\na|r|b\nb|s|a\n").unwrap();
        let got = pairs(&extract_tuples(&doc, &both, 5));
        assert_eq!(got, vec![("y".into(), "x".into()), ("x".into(), "y".into())]);
    }

    #[test]
    fn self_relation_never_pairs_a_span_with_itself() {
        let o = Ontology::parse("[concepts]\na|A|x\n[relations]\na|r|a\n").unwrap();
        let doc = tokenize("x and x", &Stopwords::builtin());
        let got = extract_tuples(&doc, &o, 3);
        assert_eq!(got.len(), 2);
        assert!(got.iter().all(|t| t.first != t.second));
    }

    #[test]
    fn multi_concept_terms_yield_every_pair() {
        let o = Ontology::parse(
            "[concepts]\na|A|x\nb|B|y\nc|C|y\n[relations]\na|r|b\na|r|c\n",
        )
        .unwrap();
        let doc = tokenize("x y", &Stopwords::empty());
        let got = extract_tuples(&doc, &o, 1);
        let concepts: Vec<&str> = got.iter().map(|t| t.target_concept.as_str()).collect();
        assert_eq!(concepts, vec!["b", "c"]);
    }
}
