//! TF-IDF features with one-vs-rest L2-regularized logistic regression,
//! trained by full-batch gradient descent.
//!
//! Persisted as JSON:
//!
//! ```text
//! {
//!   "format": "onml-tfidf-logistic",
//!   "version": 1,
//!   "labels": ["negative", "positive"],
//!   "stopwords": ["a", "an", ...],
//!   "vocabulary": [{"term": "weed", "idf": 2.38}, ...],
//!   "weights": [[bias, w_0, w_1, ...], ...],     // one row per label
//!   "config": {"epochs": 2000, "learning_rate": 4.0, "l2": 0.0001, "min_per_class": 10},
//!   "fingerprint": "<sha-256 of config, stopwords and training corpus>"
//! }
//! ```

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{BlackBox, ScoreVector};
use crate::corpus::LabeledCorpus;
use crate::error::{Error, Result};
use crate::textproc::{tokenize, Stopwords};

const FORMAT: &str = "onml-tfidf-logistic";
const VERSION: u32 = 1;

/// Sorted `(feature index, value)` pairs.
pub type SparseVec = Vec<(usize, f64)>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub l2: f64,
    pub min_per_class: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 2000,
            learning_rate: 4.0,
            l2: 1e-4,
            min_per_class: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TfidfClassifier {
    labels: Vec<String>,
    stopwords: Stopwords,
    vocab: HashMap<String, usize>,
    terms: Vec<String>,
    idf: Vec<f64>,
    /// Per label: bias followed by one weight per vocabulary term.
    weights: Vec<Vec<f64>>,
    config: TrainConfig,
    fingerprint: String,
}

#[derive(Serialize, Deserialize)]
struct VocabEntry {
    term: String,
    idf: f64,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    labels: Vec<String>,
    stopwords: Vec<String>,
    vocabulary: Vec<VocabEntry>,
    weights: Vec<Vec<f64>>,
    config: TrainConfig,
    fingerprint: String,
}

fn sigmoid(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}

fn softplus(s: f64) -> f64 {
    if s > 0.0 {
        s + (-s).exp().ln_1p()
    } else {
        s.exp().ln_1p()
    }
}

fn margin(weights: &[f64], x: &SparseVec) -> f64 {
    weights[0] + x.iter().map(|&(j, v)| weights[j + 1] * v).sum::<f64>()
}

/// Mean logistic loss of a binary classifier plus `l2/2 · ‖w‖²` (bias not
/// penalized), and its gradient. `weights[0]` is the bias; feature `j` maps
/// to `weights[j + 1]`.
pub fn logistic_loss_and_gradient(
    features: &[SparseVec],
    targets: &[f64],
    weights: &[f64],
    l2: f64,
) -> (f64, Vec<f64>) {
    let n = features.len() as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; weights.len()];
    for (x, &y) in features.iter().zip(targets) {
        let s = margin(weights, x);
        loss += softplus(s) - y * s;
        let r = sigmoid(s) - y;
        grad[0] += r;
        for &(j, v) in x {
            grad[j + 1] += r * v;
        }
    }
    loss /= n;
    grad.iter_mut().for_each(|g| *g /= n);
    for j in 1..weights.len() {
        loss += 0.5 * l2 * weights[j] * weights[j];
        grad[j] += l2 * weights[j];
    }
    (loss, grad)
}

fn content_norms(text: &str, stopwords: &Stopwords) -> Vec<String> {
    tokenize(text, stopwords)
        .tokens
        .into_iter()
        .filter(|t| !t.is_stopword())
        .map(|t| t.norm)
        .collect()
}

impl TfidfClassifier {
    pub fn train(corpus: &LabeledCorpus, config: &TrainConfig, stopwords: &Stopwords) -> Result<Self> {
        let labels: Vec<String> = corpus.label_set().into_iter().map(String::from).collect();
        if labels.len() < 2 {
            return Err(Error::DegenerateCorpus(format!(
                "need at least two classes, found {}",
                labels.len()
            )));
        }
        for label in &labels {
            let count = corpus.records().iter().filter(|r| &r.label == label).count();
            if count < config.min_per_class {
                return Err(Error::DegenerateCorpus(format!(
                    "class {label:?} has {count} examples, need {}",
                    config.min_per_class
                )));
            }
        }

        let docs: Vec<Vec<String>> = corpus
            .records()
            .iter()
            .map(|r| content_norms(&r.text, stopwords))
            .collect();
        let mut df: BTreeMap<&str, usize> = BTreeMap::new();
        for words in &docs {
            let unique: BTreeSet<&str> = words.iter().map(String::as_str).collect();
            for w in unique {
                *df.entry(w).or_default() += 1;
            }
        }
        if df.is_empty() {
            return Err(Error::DegenerateCorpus("empty vocabulary".into()));
        }
        let n = docs.len() as f64;
        let terms: Vec<String> = df.keys().map(|s| s.to_string()).collect();
        let idf: Vec<f64> = df
            .values()
            .map(|&d| ((1.0 + n) / (1.0 + d as f64)).ln() + 1.0)
            .collect();
        let vocab: HashMap<String, usize> =
            terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();

        let mut model = TfidfClassifier {
            labels,
            stopwords: stopwords.clone(),
            vocab,
            terms,
            idf,
            weights: Vec::new(),
            config: config.clone(),
            fingerprint: String::new(),
        };

        let features: Vec<SparseVec> = docs.iter().map(|w| model.featurize_words(w)).collect();
        let dim = model.terms.len() + 1;
        for label in &model.labels {
            let targets: Vec<f64> = corpus
                .records()
                .iter()
                .map(|r| if &r.label == label { 1.0 } else { 0.0 })
                .collect();
            let mut w = vec![0.0; dim];
            for _ in 0..config.epochs {
                let (_, grad) = logistic_loss_and_gradient(&features, &targets, &w, config.l2);
                w.iter_mut()
                    .zip(&grad)
                    .for_each(|(wi, gi)| *wi -= config.learning_rate * gi);
            }
            model.weights.push(w);
        }

        let mut hasher = Sha256::new();
        hasher.update(serde_json::to_vec(config)?);
        hasher.update(stopwords.to_sorted_vec().join("\n"));
        hasher.update(corpus.to_jsonl());
        model.fingerprint = hex::encode(hasher.finalize());
        Ok(model)
    }

    fn featurize_words(&self, words: &[String]) -> SparseVec {
        let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
        for w in words {
            if let Some(&j) = self.vocab.get(w) {
                *counts.entry(j).or_default() += 1.0;
            }
        }
        let mut x: SparseVec = counts
            .into_iter()
            .map(|(j, tf)| (j, tf * self.idf[j]))
            .collect();
        let norm = x.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            x.iter_mut().for_each(|(_, v)| *v /= norm);
        }
        x
    }

    /// L2-normalized TF-IDF vector of `text`; out-of-vocabulary words are
    /// dropped.
    pub fn featurize(&self, text: &str) -> SparseVec {
        self.featurize_words(&content_norms(text, &self.stopwords))
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn vocabulary(&self) -> &[String] {
        &self.terms
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile {
            format: FORMAT.into(),
            version: VERSION,
            labels: self.labels.clone(),
            stopwords: self.stopwords.to_sorted_vec(),
            vocabulary: self
                .terms
                .iter()
                .zip(&self.idf)
                .map(|(t, &idf)| VocabEntry {
                    term: t.clone(),
                    idf,
                })
                .collect(),
            weights: self.weights.clone(),
            config: self.config.clone(),
            fingerprint: self.fingerprint.clone(),
        };
        serde_json::to_string_pretty(&file).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.format != FORMAT || file.version != VERSION {
            return Err(Error::Model(format!(
                "unsupported model format {} v{}",
                file.format, file.version
            )));
        }
        let dim = file.vocabulary.len() + 1;
        if file.labels.len() < 2
            || file.weights.len() != file.labels.len()
            || file.weights.iter().any(|w| w.len() != dim)
        {
            return Err(Error::Model("weight matrix does not match labels/vocabulary".into()));
        }
        let terms: Vec<String> = file.vocabulary.iter().map(|v| v.term.clone()).collect();
        Ok(TfidfClassifier {
            labels: file.labels,
            stopwords: file.stopwords.into_iter().collect(),
            vocab: terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect(),
            idf: file.vocabulary.iter().map(|v| v.idf).collect(),
            terms,
            weights: file.weights,
            config: file.config,
            fingerprint: file.fingerprint,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

impl BlackBox for TfidfClassifier {
    fn labels(&self) -> &[String] {
        &self.labels
    }

    fn predict(&self, text: &str) -> Result<ScoreVector> {
        let x = self.featurize(text);
        let raw: Vec<f64> = self.weights.iter().map(|w| sigmoid(margin(w, &x))).collect();
        let total: f64 = raw.iter().sum();
        ScoreVector::new(raw.iter().map(|p| p / total).collect(), self.labels.clone())
    }

    fn max_in_flight(&self) -> usize {
        usize::MAX
    }
}
