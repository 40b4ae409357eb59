//! A synthetic corpus where a co-occurring pair of keywords drives the label.
//!
//! Positive documents contain a behavior word followed within `gamma`
//! content positions by a drug word in the same sentence. Negative documents
//! contain exactly one of the two kinds. The rest is neutral filler. The
//! matching ontology links `behavior ↦ drug`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{LabeledCorpus, LabeledRecord};
use crate::ontology::{Concept, Ontology, Relation};

pub const NEGATIVE: &str = "negative";
pub const POSITIVE: &str = "positive";

pub const BEHAVIOR_WORDS: [&str; 8] = [
    "smoking", "snorting", "injecting", "sniffing", "vaping", "dealing", "chewing", "popping",
];

pub const DRUG_WORDS: [&str; 8] = [
    "weed", "cocaine", "heroin", "meth", "pills", "ketamine", "crack", "molly",
];

const FILLER: [&str; 64] = [
    "morning", "friends", "park", "music", "game", "coffee", "city", "weekend", "movie", "team",
    "school", "dinner", "bus", "rain", "garden", "dog", "window", "book", "phone", "street",
    "beach", "class", "office", "party", "summer", "train", "kitchen", "river", "bike", "laptop",
    "concert", "holiday", "pizza", "sister", "brother", "neighbor", "traffic", "library", "museum",
    "football", "sunset", "breakfast", "homework", "playlist", "jacket", "market", "bridge",
    "village", "forest", "mountain", "camera", "guitar", "painting", "recipe", "weather", "tennis",
    "ticket", "airport", "hotel", "lunch", "shower", "meeting", "story", "song",
];

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedConfig {
    pub gamma: usize,
    pub sentences: usize,
    pub min_words: usize,
    pub max_words: usize,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        PlantedConfig {
            gamma: 3,
            sentences: 2,
            min_words: 8,
            max_words: 12,
        }
    }
}

pub fn planted_ontology() -> Ontology {
    let concept = |id: &str, label: &str, words: &[&str]| Concept {
        id: id.into(),
        label: label.into(),
        terms: words.iter().map(|w| w.to_string()).collect(),
    };
    Ontology::new(
        "planted",
        vec![
            concept("behavior", "Behavior", &BEHAVIOR_WORDS),
            concept("drug", "Drug", &DRUG_WORDS),
        ],
        vec![Relation {
            source: "behavior".into(),
            label: "consumes".into(),
            target: "drug".into(),
        }],
    )
    .expect("planted ontology is valid")
}

fn sentence(rng: &mut ChaCha8Rng, cfg: &PlantedConfig) -> Vec<String> {
    let n = rng.gen_range(cfg.min_words..=cfg.max_words);
    (0..n).map(|_| FILLER.choose(rng).unwrap().to_string()).collect()
}

fn render(sentences: Vec<Vec<String>>) -> String {
    sentences
        .into_iter()
        .map(|mut words| {
            let first = &mut words[0];
            *first = first[..1].to_uppercase() + &first[1..];
            words.join(" ") + "."
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// One document of the given class.
pub fn planted_doc(rng: &mut ChaCha8Rng, positive: bool, cfg: &PlantedConfig) -> String {
    let mut sentences: Vec<Vec<String>> = (0..cfg.sentences).map(|_| sentence(rng, cfg)).collect();
    let target = rng.gen_range(0..sentences.len());
    let words = &mut sentences[target];
    let behavior = BEHAVIOR_WORDS.choose(rng).unwrap().to_string();
    let drug = DRUG_WORDS.choose(rng).unwrap().to_string();
    if positive {
        let gap = rng.gen_range(0..cfg.gamma);
        let at = rng.gen_range(0..=words.len() - gap);
        words.insert(at + gap, drug);
        words.insert(at, behavior);
    } else {
        let at = rng.gen_range(0..=words.len());
        words.insert(at, if rng.gen_bool(0.5) { behavior } else { drug });
    }
    render(sentences)
}

/// `n` documents, alternating negative and positive, deterministic in
/// `seed`.
pub fn planted_corpus(n: usize, seed: u64, cfg: &PlantedConfig) -> LabeledCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let positive = i % 2 == 1;
            LabeledRecord {
                id: format!("planted-{i}"),
                text: planted_doc(&mut rng, positive, cfg),
                label: if positive { POSITIVE } else { NEGATIVE }.into(),
            }
        })
        .collect()
}

const POSITIVE_KEYS: [&str; 4] = ["cheerful", "delightful", "wonderful", "brilliant"];
const NEGATIVE_KEYS: [&str; 4] = ["dreadful", "miserable", "horrible", "awful"];

/// A simpler corpus for classifier checks: each document carries one
/// keyword from its class's list among neutral filler.
pub fn keyword_corpus(n: usize, seed: u64) -> LabeledCorpus {
    let cfg = PlantedConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let positive = i % 2 == 1;
            let keys = if positive { &POSITIVE_KEYS } else { &NEGATIVE_KEYS };
            let mut words = sentence(&mut rng, &cfg);
            let at = rng.gen_range(0..=words.len());
            words.insert(at, keys.choose(&mut rng).unwrap().to_string());
            LabeledRecord {
                id: format!("keyword-{i}"),
                text: render(vec![words]),
                label: if positive { POSITIVE } else { NEGATIVE }.into(),
            }
        })
        .collect()
}
