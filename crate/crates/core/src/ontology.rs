//! Domain ontologies: concepts with term lexicons, linked by directed
//! relations.
//!
//! # File format
//!
//! UTF-8 text in three sections. Blank lines are ignored and lines whose
//! first non-blank character is `#` are comments.
//!
//! ```text
//! [meta]
//! name=drug-abuse
//!
//! [concepts]
//! # id|label|term;term;...
//! abuse_behavior|Abuse Behavior|use;uses;smoke;shoot up
//! side_effect|Side Effect|addiction;dependence
//!
//! [relations]
//! # source_id|label|target_id
//! abuse_behavior|suffer from|side_effect
//! ```
//!
//! Terms are lowercased and split into words with the same rules as the
//! tokenizer, so `Shoot  Up` and `shoot up` are the same term. A relation
//! whose source and target are equal is a declared self-relation. Sections
//! may appear in any order and more than once.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textproc::normalize_words;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Concept {
    pub id: String,
    pub label: String,
    /// Normalized lexicon entries, in declaration order without duplicates.
    pub terms: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Relation {
    pub source: String,
    pub label: String,
    pub target: String,
}

/// An immutable, validated ontology.
#[derive(Debug, Clone)]
pub struct Ontology {
    name: String,
    meta: Vec<(String, String)>,
    concepts: Vec<Concept>,
    relations: Vec<Relation>,
    by_id: HashMap<String, usize>,
    edges: HashSet<(usize, usize)>,
    term_index: HashMap<String, Vec<usize>>,
    max_term_tokens: usize,
}

impl PartialEq for Ontology {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.meta == other.meta
            && self.concepts == other.concepts
            && self.relations == other.relations
    }
}

/// Normalizes a lexicon entry; `None` if it holds no word.
pub fn normalize_term(raw: &str) -> Option<String> {
    let words = normalize_words(raw);
    (!words.is_empty()).then(|| words.join(" "))
}

impl Ontology {
    /// Builds and validates an ontology. Terms are normalized on the way in.
    pub fn new(
        name: impl Into<String>,
        concepts: Vec<Concept>,
        relations: Vec<Relation>,
    ) -> Result<Self> {
        let name = name.into();
        let meta = if name.is_empty() {
            Vec::new()
        } else {
            vec![("name".to_string(), name.clone())]
        };
        Self::build(name, meta, concepts, relations, None)
    }

    fn build(
        name: String,
        meta: Vec<(String, String)>,
        concepts: Vec<Concept>,
        relations: Vec<Relation>,
        lines: Option<(&[usize], &[usize])>,
    ) -> Result<Self> {
        let at = |kind: usize, i: usize| -> String {
            match lines {
                Some((c, r)) => {
                    let line = if kind == 0 { c[i] } else { r[i] };
                    format!("line {line}: ")
                }
                None => String::new(),
            }
        };

        let mut normalized = Vec::with_capacity(concepts.len());
        let mut by_id = HashMap::new();
        for (i, c) in concepts.into_iter().enumerate() {
            let id = c.id.trim().to_string();
            if id.is_empty() {
                return Err(Error::Validation(format!("{}empty concept id", at(0, i))));
            }
            if by_id.insert(id.clone(), i).is_some() {
                return Err(Error::Validation(format!(
                    "{}duplicate concept id {id:?}",
                    at(0, i)
                )));
            }
            let mut seen = HashSet::new();
            let terms: Vec<String> = c
                .terms
                .iter()
                .filter_map(|t| normalize_term(t))
                .filter(|t| seen.insert(t.clone()))
                .collect();
            if terms.is_empty() {
                return Err(Error::Validation(format!(
                    "{}concept {id:?} has no terms",
                    at(0, i)
                )));
            }
            normalized.push(Concept {
                id,
                label: c.label.trim().to_string(),
                terms,
            });
        }

        let mut edges = HashSet::new();
        let mut rels = Vec::with_capacity(relations.len());
        for (i, r) in relations.into_iter().enumerate() {
            let source = r.source.trim().to_string();
            let target = r.target.trim().to_string();
            let resolve = |id: &str| {
                by_id.get(id).copied().ok_or_else(|| {
                    Error::Validation(format!(
                        "{}relation references undeclared concept id {id:?}",
                        at(1, i)
                    ))
                })
            };
            let (s, t) = (resolve(&source)?, resolve(&target)?);
            edges.insert((s, t));
            rels.push(Relation {
                source,
                label: r.label.trim().to_string(),
                target,
            });
        }

        let mut term_index: HashMap<String, Vec<usize>> = HashMap::new();
        let mut max_term_tokens = 0;
        for (ci, c) in normalized.iter().enumerate() {
            for t in &c.terms {
                max_term_tokens = max_term_tokens.max(t.split(' ').count());
                term_index.entry(t.clone()).or_default().push(ci);
            }
        }

        Ok(Ontology {
            name,
            meta,
            concepts: normalized,
            relations: rels,
            by_id,
            edges,
            term_index,
            max_term_tokens,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        #[derive(PartialEq)]
        enum Section {
            None,
            Meta,
            Concepts,
            Relations,
        }
        let mut section = Section::None;
        let mut meta = Vec::new();
        let (mut concepts, mut concept_lines) = (Vec::new(), Vec::new());
        let (mut relations, mut relation_lines) = (Vec::new(), Vec::new());

        for (n, raw) in text.lines().enumerate() {
            let line_no = n + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(header) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = match header.trim() {
                    "meta" => Section::Meta,
                    "concepts" => Section::Concepts,
                    "relations" => Section::Relations,
                    other => {
                        return Err(Error::Parse {
                            line: line_no,
                            message: format!("unknown section [{other}]"),
                        })
                    }
                };
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                line: line_no,
                message,
            };
            match section {
                Section::None => {
                    return Err(parse_err("content before the first section header".into()))
                }
                Section::Meta => {
                    let (k, v) = line
                        .split_once('=')
                        .ok_or_else(|| parse_err("expected key=value".into()))?;
                    meta.push((k.trim().to_string(), v.trim().to_string()));
                }
                Section::Concepts => {
                    let fields: Vec<&str> = line.split('|').collect();
                    let [id, label, terms] = fields[..] else {
                        return Err(parse_err(format!(
                            "expected id|label|terms, found {} field(s)",
                            fields.len()
                        )));
                    };
                    concepts.push(Concept {
                        id: id.to_string(),
                        label: label.to_string(),
                        terms: terms.split(';').map(str::to_string).collect(),
                    });
                    concept_lines.push(line_no);
                }
                Section::Relations => {
                    let fields: Vec<&str> = line.split('|').collect();
                    let [source, label, target] = fields[..] else {
                        return Err(parse_err(format!(
                            "expected source|label|target, found {} field(s)",
                            fields.len()
                        )));
                    };
                    relations.push(Relation {
                        source: source.to_string(),
                        label: label.to_string(),
                        target: target.to_string(),
                    });
                    relation_lines.push(line_no);
                }
            }
        }

        let name = meta
            .iter()
            .find(|(k, _)| k == "name")
            .map(|(_, v)| v.clone())
            .unwrap_or_default();
        Self::build(
            name,
            meta,
            concepts,
            relations,
            Some((&concept_lines, &relation_lines)),
        )
    }

    /// Reads a CSV export: `concepts_csv` has `id,label,term` rows (one per
    /// term), `relations_csv` has `source,label,target` rows. Both must carry
    /// a header line.
    pub fn from_csv(name: &str, concepts_csv: &str, relations_csv: &str) -> Result<Self> {
        let csv_err = |e: csv::Error| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        };
        let mut concepts: Vec<Concept> = Vec::new();
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(concepts_csv.as_bytes());
        for row in reader.records() {
            let row = row.map_err(csv_err)?;
            let line = row.position().map_or(0, |p| p.line() as usize);
            if row.len() != 3 {
                return Err(Error::Parse {
                    line,
                    message: "expected id,label,term".into(),
                });
            }
            match concepts.iter_mut().find(|c| c.id == row[0]) {
                Some(c) => c.terms.push(row[2].to_string()),
                None => concepts.push(Concept {
                    id: row[0].to_string(),
                    label: row[1].to_string(),
                    terms: vec![row[2].to_string()],
                }),
            }
        }
        let mut relations = Vec::new();
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(relations_csv.as_bytes());
        for row in reader.records() {
            let row = row.map_err(csv_err)?;
            if row.len() != 3 {
                return Err(Error::Parse {
                    line: row.position().map_or(0, |p| p.line() as usize),
                    message: "expected source,label,target".into(),
                });
            }
            relations.push(Relation {
                source: row[0].to_string(),
                label: row[1].to_string(),
                target: row[2].to_string(),
            });
        }
        Self::build(
            name.to_string(),
            vec![("name".into(), name.to_string())],
            concepts,
            relations,
            None,
        )
    }

    /// Serializes to the ontology file format.
    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        out.push_str("[meta]\n");
        let mut wrote_name = false;
        for (k, v) in &self.meta {
            wrote_name |= k == "name";
            let _ = writeln!(out, "{k}={v}");
        }
        if !wrote_name && !self.name.is_empty() {
            let _ = writeln!(out, "name={}", self.name);
        }
        out.push_str("\n[concepts]\n");
        for c in &self.concepts {
            let _ = writeln!(out, "{}|{}|{}", c.id, c.label, c.terms.join(";"));
        }
        out.push_str("\n[relations]\n");
        for r in &self.relations {
            let _ = writeln!(out, "{}|{}|{}", r.source, r.label, r.target);
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_file_string()).map_err(|e| Error::io(path, e))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn concepts(&self) -> &[Concept] {
        &self.concepts
    }

    pub fn relations(&self) -> &[Relation] {
        &self.relations
    }

    pub fn concept(&self, id: &str) -> Option<&Concept> {
        self.by_id.get(id).map(|&i| &self.concepts[i])
    }

    /// Number of distinct lexicon entries across all concepts.
    pub fn term_count(&self) -> usize {
        self.term_index.len()
    }

    pub fn max_term_tokens(&self) -> usize {
        self.max_term_tokens
    }

    pub(crate) fn concept_indices(&self, phrase: &str) -> Option<&[usize]> {
        self.term_index.get(phrase).map(Vec::as_slice)
    }

    pub(crate) fn has_edge_idx(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&(a, b))
    }

    /// Ids of every concept whose lexicon holds exactly `phrase` (a sequence
    /// of normalized words).
    pub fn concepts_of_term<S: AsRef<str>>(&self, phrase: &[S]) -> BTreeSet<&str> {
        let key = phrase
            .iter()
            .map(|s| s.as_ref())
            .collect::<Vec<_>>()
            .join(" ");
        self.concept_indices(&key)
            .into_iter()
            .flatten()
            .map(|&i| self.concepts[i].id.as_str())
            .collect()
    }

    /// Whether a relation `a ↦ b` is declared.
    pub fn has_edge(&self, a: &str, b: &str) -> Result<bool> {
        let ia = *self
            .by_id
            .get(a)
            .ok_or_else(|| Error::UnknownConcept(a.to_string()))?;
        let ib = *self
            .by_id
            .get(b)
            .ok_or_else(|| Error::UnknownConcept(b.to_string()))?;
        Ok(self.has_edge_idx(ia, ib))
    }
}

/// Names of the ontologies bundled with the crate.
pub const SHIPPED: [&str; 2] = ["drug_abuse", "consumer_complaint"];

/// A bundled ontology by name.
pub fn shipped(name: &str) -> Option<Ontology> {
    let text = match name {
        "drug_abuse" => include_str!("../data/ontologies/drug_abuse.onto"),
        "consumer_complaint" => include_str!("../data/ontologies/consumer_complaint.onto"),
        _ => return None,
    };
    Some(Ontology::parse(text).expect("bundled ontology is valid"))
}

pub fn load_ontology(path: impl AsRef<Path>) -> Result<Ontology> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut o = Ontology::parse(&text)?;
    if o.name.is_empty() {
        o.name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
    }
    Ok(o)
}
