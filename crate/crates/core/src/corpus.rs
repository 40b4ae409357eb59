//! Labeled text corpora, stored as JSON lines:
//! `{"id": "d1", "text": "...", "label": "positive"}` (`id` optional).

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledRecord {
    #[serde(default)]
    pub id: String,
    pub text: String,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LabeledCorpus {
    records: Vec<LabeledRecord>,
}

impl LabeledCorpus {
    /// Rejects empty texts and labels. Missing ids become `doc-<index>`.
    pub fn new(mut records: Vec<LabeledRecord>) -> Result<Self> {
        for (i, r) in records.iter_mut().enumerate() {
            if r.text.trim().is_empty() {
                return Err(Error::DegenerateCorpus(format!("record {i} has empty text")));
            }
            if r.label.trim().is_empty() {
                return Err(Error::DegenerateCorpus(format!("record {i} has empty label")));
            }
            if r.id.is_empty() {
                r.id = format!("doc-{i}");
            }
        }
        Ok(LabeledCorpus { records })
    }

    pub fn parse_jsonl(text: &str) -> Result<Self> {
        let mut records = Vec::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let r: LabeledRecord = serde_json::from_str(line).map_err(|e| Error::Parse {
                line: n + 1,
                message: e.to_string(),
            })?;
            records.push(r);
        }
        Self::new(records)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_jsonl(&text)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            let _ = writeln!(
                out,
                "{}",
                serde_json::to_string(r).expect("records serialize")
            );
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_jsonl()).map_err(|e| Error::io(path, e))
    }

    pub fn records(&self) -> &[LabeledRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn label_set(&self) -> BTreeSet<&str> {
        self.records.iter().map(|r| r.label.as_str()).collect()
    }

    /// Shuffles with `seed` and splits off the first `fraction` as the
    /// first part.
    pub fn split(&self, fraction: f64, seed: u64) -> (LabeledCorpus, LabeledCorpus) {
        let mut records = self.records.clone();
        records.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let cut = ((records.len() as f64) * fraction).round() as usize;
        let rest = records.split_off(cut.min(records.len()));
        (
            LabeledCorpus { records },
            LabeledCorpus { records: rest },
        )
    }

    pub fn filter(&self, keep: impl Fn(&LabeledRecord) -> bool) -> LabeledCorpus {
        LabeledCorpus {
            records: self.records.iter().filter(|r| keep(r)).cloned().collect(),
        }
    }
}

impl FromIterator<LabeledRecord> for LabeledCorpus {
    fn from_iter<I: IntoIterator<Item = LabeledRecord>>(iter: I) -> Self {
        LabeledCorpus {
            records: iter.into_iter().collect(),
        }
    }
}
