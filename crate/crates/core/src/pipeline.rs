//! The end-to-end explanation of one document.
//!
//! 1. tokenize and extract ontology tuples
//! 2. sample perturbations over fused units and fit the surrogate against the
//!    score of the originally predicted class
//! 3. learn anchors, align triplexes, merge tuples
//! 4. compose and score the final explanations
//!
//! In LIME mode tuples are not fused and the output is one explanation per
//! selected word.

use serde::{Deserialize, Serialize};

use crate::anchors::{learn_anchors, Anchor, AnchorSeedSet};
use crate::blackbox::{BlackBox, ScoreVector};
use crate::composer::{compose, insert_causal, merge_tuples, Explanation, OntologyExplanation, Provenance};
use crate::error::Result;
use crate::ontology::Ontology;
use crate::surrogate::{
    fit_local, unit_text, ImportanceScorer, LocalFit, SpanScorer, SurrogateConfig, SurrogateModel,
    UnitKind,
};
use crate::textproc::{tokenize, Stopwords, TokenizedDoc};
use crate::triplex::{align_all, extract_builtin, AlignedTriplex, Triplex, VerbLexicon, DEFAULT_MIN_CONFIDENCE};
use crate::tuples::{extract_tuples, OntologyTuple};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExplainConfig {
    pub gamma: usize,
    pub surrogate: SurrogateConfig,
    pub lime_mode: bool,
    pub anchors: bool,
    pub min_confidence: f64,
    pub builtin_triplexes: bool,
}

impl Default for ExplainConfig {
    fn default() -> Self {
        ExplainConfig {
            gamma: 3,
            surrogate: SurrogateConfig::default(),
            lime_mode: false,
            anchors: true,
            min_confidence: DEFAULT_MIN_CONFIDENCE,
            builtin_triplexes: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitSummary {
    pub text: String,
    pub kind: UnitKind,
    pub tokens: Vec<usize>,
    pub coefficient: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentExplanation {
    pub doc_id: String,
    pub text: String,
    pub prediction: ScoreVector,
    pub target_class: usize,
    pub predicted_label: String,
    pub tuples: Vec<OntologyTuple>,
    pub units: Vec<UnitSummary>,
    /// Absent when the document has no content words.
    pub surrogate: Option<SurrogateModel>,
    pub anchors: Vec<Anchor>,
    pub triplexes: Vec<AlignedTriplex>,
    pub ontology_explanations: Vec<OntologyExplanation>,
    pub explanations: Vec<Explanation>,
}

/// One line of explanation output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationRecord {
    pub doc_id: String,
    pub sentence_idx: usize,
    pub text: String,
    pub score: f64,
    pub rank: usize,
    pub provenance: Provenance,
}

impl DocumentExplanation {
    pub fn records(&self) -> Vec<ExplanationRecord> {
        self.explanations
            .iter()
            .map(|e| ExplanationRecord {
                doc_id: self.doc_id.clone(),
                sentence_idx: e.sentence,
                text: e.text.clone(),
                score: e.score,
                rank: e.rank,
                provenance: e.provenance.clone(),
            })
            .collect()
    }
}

pub struct Explainer<'a> {
    ontology: &'a Ontology,
    model: &'a dyn BlackBox,
    stopwords: Stopwords,
    seeds: AnchorSeedSet,
    verbs: VerbLexicon,
    config: ExplainConfig,
}

impl<'a> Explainer<'a> {
    pub fn new(ontology: &'a Ontology, model: &'a dyn BlackBox, config: ExplainConfig) -> Self {
        Explainer {
            ontology,
            model,
            stopwords: Stopwords::builtin(),
            seeds: AnchorSeedSet::builtin(),
            verbs: VerbLexicon::builtin(),
            config,
        }
    }

    pub fn with_stopwords(mut self, stopwords: Stopwords) -> Self {
        self.stopwords = stopwords;
        self
    }

    pub fn with_seeds(mut self, seeds: AnchorSeedSet) -> Self {
        self.seeds = seeds;
        self
    }

    pub fn config(&self) -> &ExplainConfig {
        &self.config
    }

    pub fn model(&self) -> &'a dyn BlackBox {
        self.model
    }

    pub fn tokenize(&self, text: &str) -> TokenizedDoc {
        tokenize(text, &self.stopwords)
    }

    /// Tuples of `doc`, or none in LIME mode.
    pub fn tuples(&self, doc: &TokenizedDoc) -> Vec<OntologyTuple> {
        if self.config.lime_mode {
            Vec::new()
        } else {
            extract_tuples(doc, self.ontology, self.config.gamma)
        }
    }

    /// Fits the surrogate; `None` when the document has no content words.
    pub fn fit(
        &self,
        doc: &TokenizedDoc,
        tuples: &[OntologyTuple],
        target_class: usize,
        seed: u64,
    ) -> Result<Option<LocalFit>> {
        if doc.tokens.iter().all(|t| t.is_stopword()) {
            return Ok(None);
        }
        let config = SurrogateConfig {
            seed,
            ..self.config.surrogate.clone()
        };
        fit_local(doc, tuples, self.model, target_class, &config).map(Some)
    }

    pub fn scorer<'s>(&'s self, doc: &'s TokenizedDoc, fit: &'s LocalFit) -> Result<ImportanceScorer<'s>> {
        ImportanceScorer::new(doc, &fit.units, self.model, &fit.surrogate)
    }

    pub fn anchors(&self, doc: &TokenizedDoc, scorer: &dyn SpanScorer) -> Result<Vec<Anchor>> {
        if self.config.anchors {
            learn_anchors(doc, &self.seeds, scorer)
        } else {
            Ok(Vec::new())
        }
    }

    /// Supplied triplexes plus, when enabled, built-in extractions, all
    /// filtered by `min_confidence` and aligned to `doc`.
    pub fn triplexes(&self, doc: &TokenizedDoc, doc_id: &str, supplied: &[Triplex]) -> Vec<AlignedTriplex> {
        let mut all: Vec<Triplex> = supplied
            .iter()
            .filter(|t| t.confidence > self.config.min_confidence)
            .cloned()
            .collect();
        if self.config.builtin_triplexes {
            all.extend(
                extract_builtin(doc, doc_id, &self.verbs)
                    .into_iter()
                    .filter(|t| t.confidence > self.config.min_confidence),
            );
        }
        align_all(doc, &all)
    }

    pub fn ontology_explanations(&self, doc: &TokenizedDoc, tuples: &[OntologyTuple]) -> Vec<OntologyExplanation> {
        (0..doc.sentence_count)
            .flat_map(|s| {
                let in_sentence: Vec<OntologyTuple> =
                    tuples.iter().filter(|t| t.sentence() == s).cloned().collect();
                merge_tuples(&in_sentence)
            })
            .map(|e| insert_causal(doc, &e))
            .collect()
    }

    /// Explains `text` with the configured seed.
    pub fn explain(&self, doc_id: &str, text: &str, triplexes: &[Triplex]) -> Result<DocumentExplanation> {
        self.explain_seeded(doc_id, text, triplexes, self.config.surrogate.seed)
    }

    pub fn explain_seeded(
        &self,
        doc_id: &str,
        text: &str,
        triplexes: &[Triplex],
        seed: u64,
    ) -> Result<DocumentExplanation> {
        let doc = self.tokenize(text);
        let prediction = self.model.predict(text)?;
        let target_class = prediction.argmax();
        let tuples = self.tuples(&doc);
        let mut out = DocumentExplanation {
            doc_id: doc_id.to_string(),
            text: text.to_string(),
            predicted_label: prediction.predicted_label().to_string(),
            prediction,
            target_class,
            tuples: tuples.clone(),
            units: Vec::new(),
            surrogate: None,
            anchors: Vec::new(),
            triplexes: Vec::new(),
            ontology_explanations: Vec::new(),
            explanations: Vec::new(),
        };
        let Some(fit) = self.fit(&doc, &tuples, target_class, seed)? else {
            return Ok(out);
        };
        let scorer = self.scorer(&doc, &fit)?;
        out.units = fit
            .units
            .units()
            .iter()
            .zip(&fit.surrogate.coefficients)
            .map(|(u, &c)| UnitSummary {
                text: unit_text(&doc, u),
                kind: u.kind,
                tokens: u.tokens.clone(),
                coefficient: c,
            })
            .collect();
        if self.config.lime_mode {
            out.explanations = word_explanations(&doc, &fit, &scorer)?;
        } else {
            out.anchors = self.anchors(&doc, &scorer)?;
            out.triplexes = self.triplexes(&doc, doc_id, triplexes);
            out.ontology_explanations = self.ontology_explanations(&doc, &tuples);
            out.explanations = compose(&doc, &out.ontology_explanations, &out.anchors, &out.triplexes, &scorer)?;
        }
        out.surrogate = Some(fit.surrogate);
        Ok(out)
    }
}

/// One explanation per selected unit with a nonzero coefficient, scored and
/// ranked like composed explanations.
pub fn word_explanations(
    doc: &TokenizedDoc,
    fit: &LocalFit,
    scorer: &dyn SpanScorer,
) -> Result<Vec<Explanation>> {
    let chosen: Vec<&[usize]> = fit
        .surrogate
        .selected_units
        .iter()
        .filter(|&&u| fit.surrogate.coefficients[u] != 0.0)
        .map(|&u| fit.units.units()[u].tokens.as_slice())
        .collect();
    let spans: Vec<Vec<usize>> = chosen.iter().map(|t| t.to_vec()).collect();
    let scores = scorer.score_spans(&spans)?;
    let mut out: Vec<Explanation> = chosen
        .iter()
        .zip(scores)
        .map(|(tokens, score)| {
            let (lo, hi) = (tokens[0], tokens[tokens.len() - 1]);
            Explanation {
                sentence: doc.tokens[lo].sent_idx,
                start: lo,
                end: hi + 1,
                char_start: doc.tokens[lo].char_span.start,
                char_end: doc.tokens[hi].char_span.end,
                text: doc.text_of(lo..hi + 1).to_string(),
                score,
                rank: 0,
                provenance: Provenance::default(),
            }
        })
        .collect();
    out.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.start.cmp(&b.start)));
    for (i, e) in out.iter_mut().enumerate() {
        e.rank = i + 1;
    }
    Ok(out)
}
