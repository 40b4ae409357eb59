//! The black-box prediction interface `f: text → class scores`.
//!
//! Anything that maps text to a normalized score vector can be explained.
//! Two implementations ship: a TF-IDF + one-vs-rest logistic classifier
//! trained in-process ([`TfidfClassifier`]), and an adapter that talks to an
//! external model over a line-delimited JSON protocol ([`ExternalModel`]).

mod builtin;
mod external;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use builtin::{logistic_loss_and_gradient, SparseVec, TfidfClassifier, TrainConfig};
pub use external::{serve, ExternalModel, Handshake, Request, Response};

/// Tolerance on `Σ scores = 1`.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreVector {
    pub scores: Vec<f64>,
    pub labels: Vec<String>,
}

impl ScoreVector {
    pub fn new(scores: Vec<f64>, labels: Vec<String>) -> Result<Self> {
        if scores.len() != labels.len() {
            return Err(Error::Model(format!(
                "{} scores for {} labels",
                scores.len(),
                labels.len()
            )));
        }
        if scores.len() < 2 {
            return Err(Error::Model("need at least two classes".into()));
        }
        if scores.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(Error::Model(format!("invalid scores {scores:?}")));
        }
        let sum: f64 = scores.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::Model(format!("scores sum to {sum}, not 1")));
        }
        Ok(ScoreVector { scores, labels })
    }

    /// Index of the highest score; the first one wins ties.
    pub fn argmax(&self) -> usize {
        self.scores
            .iter()
            .enumerate()
            .fold(0, |best, (i, &s)| if s > self.scores[best] { i } else { best })
    }

    pub fn predicted_label(&self) -> &str {
        &self.labels[self.argmax()]
    }

    pub fn score(&self, class: usize) -> f64 {
        self.scores[class]
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

/// A text classifier. Implementations must be deterministic: the same text
/// always yields the same scores.
pub trait BlackBox: Send + Sync {
    fn labels(&self) -> &[String];

    fn predict(&self, text: &str) -> Result<ScoreVector>;

    /// Elementwise equal to [`predict`](Self::predict), order preserved.
    fn predict_batch(&self, texts: &[String]) -> Result<Vec<ScoreVector>> {
        texts
            .iter()
            .enumerate()
            .map(|(index, t)| {
                self.predict(t).map_err(|e| Error::Batch {
                    index,
                    source: Box::new(e),
                })
            })
            .collect()
    }

    /// Requests the model accepts concurrently.
    fn max_in_flight(&self) -> usize {
        1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Builtin,
    External,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Builtin => "builtin",
            ModelKind::External => "external",
        })
    }
}

/// A trained or connected model.
#[derive(Debug)]
pub enum ModelHandle {
    Builtin(TfidfClassifier),
    External(ExternalModel),
}

impl ModelHandle {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelHandle::Builtin(_) => ModelKind::Builtin,
            ModelHandle::External(_) => ModelKind::External,
        }
    }

    /// Training fingerprint for built-in models; the spawn command for
    /// external ones.
    pub fn fingerprint(&self) -> String {
        match self {
            ModelHandle::Builtin(m) => m.fingerprint().to_string(),
            ModelHandle::External(m) => m.command_line(),
        }
    }
}

impl BlackBox for ModelHandle {
    fn labels(&self) -> &[String] {
        match self {
            ModelHandle::Builtin(m) => m.labels(),
            ModelHandle::External(m) => m.labels(),
        }
    }

    fn predict(&self, text: &str) -> Result<ScoreVector> {
        match self {
            ModelHandle::Builtin(m) => m.predict(text),
            ModelHandle::External(m) => m.predict(text),
        }
    }

    fn predict_batch(&self, texts: &[String]) -> Result<Vec<ScoreVector>> {
        match self {
            ModelHandle::Builtin(m) => m.predict_batch(texts),
            ModelHandle::External(m) => m.predict_batch(texts),
        }
    }

    fn max_in_flight(&self) -> usize {
        match self {
            ModelHandle::Builtin(m) => m.max_in_flight(),
            ModelHandle::External(m) => m.max_in_flight(),
        }
    }
}

impl<T: BlackBox + ?Sized> BlackBox for &T {
    fn labels(&self) -> &[String] {
        (**self).labels()
    }
    fn predict(&self, text: &str) -> Result<ScoreVector> {
        (**self).predict(text)
    }
    fn predict_batch(&self, texts: &[String]) -> Result<Vec<ScoreVector>> {
        (**self).predict_batch(texts)
    }
    fn max_in_flight(&self) -> usize {
        (**self).max_in_flight()
    }
}
