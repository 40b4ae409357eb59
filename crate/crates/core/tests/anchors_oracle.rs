mod common;

use onml::anchors::{learn_anchors, AnchorSeedSet};
use onml::blackbox::{BlackBox, ScoreVector};
use onml::surrogate::{fit_local, importance_score, ImportanceScorer, SurrogateConfig};
use onml::textproc::{tokenize, Stopwords, TokenizedDoc};
use onml::Result;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const WORDS: [&str; 10] = ["we", "paid", "the", "bill", "on", "time", "and", "they", "sent", "letters"];
const SEEDS: [&str; 5] = ["not", "no", "illegal", "against", "without"];

fn sentence(rng: &mut ChaCha8Rng) -> String {
    let n = rng.gen_range(3..12);
    let mut words: Vec<&str> = (0..n).map(|_| *WORDS.choose(rng).unwrap()).collect();
    for _ in 0..rng.gen_range(1..=2) {
        let at = rng.gen_range(0..=words.len());
        words.insert(at, SEEDS.choose(rng).unwrap());
    }
    words.join(" ") + "."
}

/// Sum of per-word weights: linear, so the argmax is well spread.
struct Weighted;

fn weight(word: &str) -> f64 {
    let h = word.bytes().fold(7u64, |h, b| h.wrapping_mul(31).wrapping_add(b as u64));
    (h % 13) as f64 / 13.0 - 0.4
}

impl BlackBox for Weighted {
    fn labels(&self) -> &[String] {
        static L: std::sync::OnceLock<Vec<String>> = std::sync::OnceLock::new();
        L.get_or_init(|| vec!["a".into(), "b".into()])
    }
    fn predict(&self, text: &str) -> Result<ScoreVector> {
        let s: f64 = text.split_whitespace().map(|w| weight(&w.to_lowercase())).sum();
        let p = 1.0 / (1.0 + (-s).exp());
        ScoreVector::new(vec![1.0 - p, p], self.labels().to_vec())
    }
}

/// Every (seed occurrence, end) prefix in the sentence, best first by
/// score; ties to the earliest start, then the shortest.
fn exhaustive(doc: &TokenizedDoc, score: impl Fn(&[usize]) -> f64) -> Option<(usize, usize)> {
    let range = doc.sentence(0);
    let mut best: Option<((usize, usize), f64)> = None;
    for i in range.clone() {
        if !SEEDS.contains(&doc.tokens[i].norm.as_str()) {
            continue;
        }
        for j in i + 1..=range.end {
            let span: Vec<usize> = (i..j).collect();
            let s = score(&span);
            if best.is_none_or(|(_, b)| s > b) {
                best = Some(((i, j), s));
            }
        }
    }
    best.map(|(r, _)| r)
}

#[test]
fn greedy_anchor_equals_exhaustive_argmax() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let sw = Stopwords::builtin();
    let seeds = AnchorSeedSet::builtin();
    let model = Weighted;
    for _ in 0..200 {
        let doc = tokenize(&sentence(&mut rng), &sw);
        let cfg = SurrogateConfig {
            samples: 200,
            seed: rng.gen(),
            ..Default::default()
        };
        let fit = fit_local(&doc, &[], &model, 1, &cfg).unwrap();
        let scorer = ImportanceScorer::new(&doc, &fit.units, &model, &fit.surrogate).unwrap();
        let anchors = learn_anchors(&doc, &seeds, &scorer).unwrap();
        let expected = exhaustive(&doc, |span| {
            importance_score(&doc, &fit.units, span, &model, &fit.surrogate).unwrap()
        });
        let got = anchors.first().map(|a| (a.span.start, a.span.end));
        assert_eq!(got, expected, "{}", doc.text);
        assert!(anchors.len() <= 1);
        if let Some(a) = anchors.first() {
            assert!(doc.text.contains(&a.text));
        }
    }
}

#[test]
fn quantized_scores_break_ties_toward_short_early_prefixes() {
    let mut rng = ChaCha8Rng::seed_from_u64(81);
    let sw = Stopwords::builtin();
    let seeds = AnchorSeedSet::builtin();
    for _ in 0..200 {
        let doc = tokenize(&sentence(&mut rng), &sw);
        let score = |span: &[usize]| {
            let s: f64 = span.iter().map(|&t| weight(&doc.tokens[t].norm)).sum();
            (s * 2.0).round()
        };
        let anchors = learn_anchors(&doc, &seeds, &score).unwrap();
        let got = anchors.first().map(|a| (a.span.start, a.span.end));
        assert_eq!(got, exhaustive(&doc, score));
    }
}
