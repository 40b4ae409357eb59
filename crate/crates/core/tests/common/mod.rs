#![allow(dead_code)]

use onml::ontology::{Concept, Ontology, Relation};
use onml::textproc::Stopwords;
use rand::seq::SliceRandom;
use rand::Rng;

pub const VOCAB: [&str; 12] = [
    "red", "green", "blue", "cat", "dog", "fish", "run", "jump", "swim", "big", "small", "fast",
];
pub const STOP: [&str; 3] = ["the", "of", "and"];

pub fn stopwords() -> Stopwords {
    STOP.iter().copied().collect()
}

/// About `len` words drawn from the vocabulary and stopwords, with the
/// occasional sentence break.
pub fn random_text(rng: &mut impl Rng, len: usize) -> String {
    let mut out = Vec::new();
    for i in 0..len {
        let w = if rng.gen_bool(0.2) {
            STOP.choose(rng).unwrap()
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

/// Up to five concepts over random one- and two-word terms, with random
/// edges (self-loops included).
pub fn random_ontology(rng: &mut impl Rng) -> Ontology {
    let n = rng.gen_range(1..=5);
    let concepts: Vec<Concept> = (0..n)
        .map(|i| {
            let k = rng.gen_range(1..=4);
            let terms = (0..k)
                .map(|_| {
                    if rng.gen_bool(0.25) {
                        format!("{} {}", VOCAB.choose(rng).unwrap(), VOCAB.choose(rng).unwrap())
                    } else {
                        VOCAB.choose(rng).unwrap().to_string()
                    }
                })
                .collect();
            Concept {
                id: format!("c{i}"),
                label: format!("C{i}"),
                terms,
            }
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
