//! Ontology-aware perturbation sampling, the kernel-weighted linear
//! surrogate, and importance scores of word sets.
//!
//! Interpretable units are single content words, except that the words of
//! every ontology tuple are fused into one unit and switched on or off
//! together. Tuples sharing a word chain into a single unit. With no tuples
//! the units are plain words, which is the LIME configuration.
//!
//! The surrogate minimizes `Σ φ(z) (f(z) − g(z'))² + ridge · ‖w‖²` with an
//! unpenalized intercept, then keeps the `top_k` units with the largest
//! `|w|` and refits on those alone.

use std::collections::{BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::blackbox::{BlackBox, ScoreVector};
use crate::error::{Error, Result};
use crate::textproc::{normalize_words, TokenizedDoc, UnitSpan};
use crate::tuples::OntologyTuple;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SurrogateConfig {
    pub samples: usize,
    pub sigma: f64,
    pub threshold: f64,
    pub ridge: f64,
    pub top_k: usize,
    pub seed: u64,
}

impl Default for SurrogateConfig {
    fn default() -> Self {
        SurrogateConfig {
            samples: 1000,
            sigma: 0.25,
            threshold: 0.5,
            ridge: 1e-3,
            top_k: 5,
            seed: 0,
        }
    }
}

impl SurrogateConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Fit(m));
        if self.samples == 0 {
            return bad("samples must be at least 1".into());
        }
        if !(self.sigma > 0.0) {
            return bad(format!("sigma must be positive, got {}", self.sigma));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return bad(format!("threshold must lie in (0, 1), got {}", self.threshold));
        }
        if !(self.ridge >= 0.0) {
            return bad(format!("ridge must be non-negative, got {}", self.ridge));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitKind {
    Word,
    Tuple,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Unit {
    pub kind: UnitKind,
    /// Doc token indices switched off together, ascending.
    pub tokens: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterpretableUnits {
    units: Vec<Unit>,
    /// Unit owning each doc token; `None` for stopwords outside tuples.
    owner: Vec<Option<usize>>,
}

impl InterpretableUnits {
    pub fn units(&self) -> &[Unit] {
        &self.units
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    pub fn owner(&self, token: usize) -> Option<usize> {
        self.owner.get(token).copied().flatten()
    }

    /// Units holding at least one of `tokens`, ascending.
    pub fn units_touching(&self, tokens: &[usize]) -> BTreeSet<usize> {
        tokens.iter().filter_map(|&t| self.owner(t)).collect()
    }

    /// Tokens removed from the document under `mask`.
    pub fn deleted_tokens(&self, mask: &[bool]) -> BTreeSet<usize> {
        self.units
            .iter()
            .zip(mask)
            .filter(|(_, &on)| !on)
            .flat_map(|(u, _)| u.tokens.iter().copied())
            .collect()
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Fuses tuple words into shared units; every other content token becomes
/// its own unit. Units are ordered by their first token.
pub fn build_units(doc: &TokenizedDoc, tuples: &[OntologyTuple]) -> InterpretableUnits {
    let n = doc.tokens.len();
    let mut parent: Vec<usize> = (0..n).collect();
    let mut in_tuple = vec![false; n];
    for t in tuples {
        let tokens: Vec<usize> = t.first.range().chain(t.second.range()).collect();
        for &tok in &tokens {
            in_tuple[tok] = true;
            let (a, b) = (find(&mut parent, tokens[0]), find(&mut parent, tok));
            if a != b {
                parent[b.max(a)] = a.min(b);
            }
        }
    }

    let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
    let mut units = Vec::new();
    for tok in 0..n {
        if in_tuple[tok] {
            let root = find(&mut parent, tok);
            groups.entry(root).or_default().push(tok);
        } else if !doc.tokens[tok].is_stopword() {
            units.push(Unit {
                kind: UnitKind::Word,
                tokens: vec![tok],
            });
        }
    }
    units.extend(groups.into_values().map(|tokens| Unit {
        kind: UnitKind::Tuple,
        tokens,
    }));
    units.sort_by_key(|u| u.tokens[0]);

    let mut owner = vec![None; n];
    for (i, u) in units.iter().enumerate() {
        for &t in &u.tokens {
            owner[t] = Some(i);
        }
    }
    InterpretableUnits { units, owner }
}

pub type Mask = Vec<bool>;

/// `n` presence masks over the units. Mask 0 keeps everything; in the
/// others each unit is kept iff its uniform draw exceeds `threshold`.
pub fn sample_perturbations(
    units: &InterpretableUnits,
    n: usize,
    threshold: f64,
    seed: u64,
) -> Vec<Mask> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = units.len();
    (0..n)
        .map(|i| {
            if i == 0 {
                vec![true; d]
            } else {
                (0..d).map(|_| rng.gen::<f64>() > threshold).collect()
            }
        })
        .collect()
}

fn term_counts(text: &str) -> HashMap<String, f64> {
    let mut counts = HashMap::new();
    for w in normalize_words(text) {
        *counts.entry(w).or_insert(0.0) += 1.0;
    }
    counts
}

/// Cosine distance between the term-frequency vectors of two texts; 1 when
/// either has no words.
pub fn cosine_distance(x_text: &str, z_text: &str) -> f64 {
    let (x, z) = (term_counts(x_text), term_counts(z_text));
    if x.is_empty() || z.is_empty() {
        return 1.0;
    }
    let (sx, sz): (f64, f64) = (x.values().sum(), z.values().sum());
    if x.len() == z.len() && x.iter().all(|(w, a)| z.get(w).is_some_and(|b| a * sz == b * sx)) {
        // Proportional counts: exactly zero, free of rounding.
        return 0.0;
    }
    let dot: f64 = x
        .iter()
        .filter_map(|(w, a)| z.get(w).map(|b| a * b))
        .sum();
    let nx = x.values().map(|v| v * v).sum::<f64>().sqrt();
    let nz = z.values().map(|v| v * v).sum::<f64>().sqrt();
    (1.0 - dot / (nx * nz)).clamp(0.0, 1.0)
}

/// `exp(−D² / σ²)` with `D` the cosine distance.
pub fn kernel_weight(x_text: &str, z_text: &str, sigma: f64) -> f64 {
    let d = cosine_distance(x_text, z_text);
    (-(d * d) / (sigma * sigma)).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub mask: Mask,
    pub text: String,
    pub weight: f64,
    pub scores: ScoreVector,
}

/// Renders each mask, queries the model in one batch and weighs the samples.
pub fn perturb(
    doc: &TokenizedDoc,
    units: &InterpretableUnits,
    masks: Vec<Mask>,
    model: &dyn BlackBox,
    sigma: f64,
) -> Result<Vec<Perturbation>> {
    let texts: Vec<String> = masks
        .iter()
        .map(|m| doc.delete_tokens(&units.deleted_tokens(m)))
        .collect();
    let scores = model.predict_batch(&texts)?;
    Ok(masks
        .into_iter()
        .zip(texts)
        .zip(scores)
        .map(|((mask, text), scores)| Perturbation {
            weight: kernel_weight(&doc.text, &text, sigma),
            mask,
            text,
            scores,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateModel {
    /// One coefficient per unit; zero for units outside `selected_units`.
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub target_class: usize,
    pub kernel_sigma: f64,
    pub sample_count: usize,
    /// Indices of the kept units, largest `|coefficient|` first.
    pub selected_units: Vec<usize>,
    /// Weighted R² of the final fit on the samples.
    pub r_squared: f64,
}

/// Solves `A x = b` for symmetric positive-definite `A` (row-major, n×n).
fn cholesky_solve(mut a: Vec<f64>, mut b: Vec<f64>, n: usize) -> Result<Vec<f64>> {
    let scale = (0..n).map(|i| a[i * n + i]).fold(0.0_f64, f64::max);
    let tol = 1e-12 * scale.max(f64::MIN_POSITIVE);
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if !(d > tol) {
            return Err(Error::Fit(format!(
                "weighted normal equations are singular at unit column {j}"
            )));
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / d;
        }
    }
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= a[i * n + k] * b[k];
        }
        b[i] = s / a[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= a[k * n + i] * b[k];
        }
        b[i] = s / a[i * n + i];
    }
    Ok(b)
}

struct LinearFit {
    coefficients: Vec<f64>,
    intercept: f64,
}

/// Weighted ridge regression on the mask columns `cols`, intercept
/// unpenalized, solved in centered form.
fn weighted_ridge(
    masks: &[&[bool]],
    y: &[f64],
    w: &[f64],
    cols: &[usize],
    ridge: f64,
) -> Result<LinearFit> {
    let total: f64 = w.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Fit("sample weights sum to zero".into()));
    }
    let p = cols.len();
    let x = |i: usize, j: usize| if masks[i][cols[j]] { 1.0 } else { 0.0 };
    let y_mean = w.iter().zip(y).map(|(wi, yi)| wi * yi).sum::<f64>() / total;
    let x_mean: Vec<f64> = (0..p)
        .map(|j| (0..masks.len()).map(|i| w[i] * x(i, j)).sum::<f64>() / total)
        .collect();

    let mut a = vec![0.0; p * p];
    let mut b = vec![0.0; p];
    for i in 0..masks.len() {
        let xc: Vec<f64> = (0..p).map(|j| x(i, j) - x_mean[j]).collect();
        let yc = y[i] - y_mean;
        for j in 0..p {
            let wx = w[i] * xc[j];
            b[j] += wx * yc;
            for k in 0..=j {
                a[j * p + k] += wx * xc[k];
            }
        }
    }
    for j in 0..p {
        for k in 0..j {
            a[k * p + j] = a[j * p + k];
        }
        a[j * p + j] += ridge;
    }
    let coefficients = cholesky_solve(a, b, p)?;
    let intercept = y_mean
        - coefficients
            .iter()
            .zip(&x_mean)
            .map(|(c, m)| c * m)
            .sum::<f64>();
    Ok(LinearFit {
        coefficients,
        intercept,
    })
}

/// Fits the surrogate to the perturbations' scores for `target_class`.
pub fn fit_surrogate(
    perturbations: &[Perturbation],
    target_class: usize,
    config: &SurrogateConfig,
) -> Result<SurrogateModel> {
    let Some(first) = perturbations.first() else {
        return Err(Error::Fit("no samples".into()));
    };
    let d = first.mask.len();
    if d == 0 {
        return Err(Error::Fit("no interpretable units".into()));
    }
    if perturbations.iter().any(|p| p.mask.len() != d) {
        return Err(Error::Fit("masks differ in length".into()));
    }
    let distinct: BTreeSet<&[bool]> = perturbations.iter().map(|p| p.mask.as_slice()).collect();
    if distinct.len() < 2 {
        return Err(Error::Fit("need at least two distinct masks".into()));
    }

    let masks: Vec<&[bool]> = perturbations.iter().map(|p| p.mask.as_slice()).collect();
    let y: Vec<f64> = perturbations.iter().map(|p| p.scores.score(target_class)).collect();
    let w: Vec<f64> = perturbations.iter().map(|p| p.weight).collect();

    let all: Vec<usize> = (0..d).collect();
    let full = weighted_ridge(&masks, &y, &w, &all, config.ridge)?;
    let mut ranked = all.clone();
    ranked.sort_by(|&a, &b| {
        full.coefficients[b]
            .abs()
            .total_cmp(&full.coefficients[a].abs())
            .then(a.cmp(&b))
    });
    let keep = config.top_k.min(d);
    let (coefficients, intercept, selected) = if keep == d {
        (full.coefficients, full.intercept, ranked)
    } else {
        let mut selected = ranked[..keep].to_vec();
        let mut cols = selected.clone();
        cols.sort_unstable();
        let refit = weighted_ridge(&masks, &y, &w, &cols, config.ridge)?;
        let mut coefficients = vec![0.0; d];
        for (&c, &v) in cols.iter().zip(&refit.coefficients) {
            coefficients[c] = v;
        }
        selected.sort_by(|&a, &b| {
            coefficients[b]
                .abs()
                .total_cmp(&coefficients[a].abs())
                .then(a.cmp(&b))
        });
        (coefficients, refit.intercept, selected)
    };

    let total: f64 = w.iter().sum();
    let y_mean = w.iter().zip(&y).map(|(wi, yi)| wi * yi).sum::<f64>() / total;
    let (mut ss_res, mut ss_tot) = (0.0, 0.0);
    for (i, m) in masks.iter().enumerate() {
        let pred = intercept
            + m.iter()
                .zip(&coefficients)
                .filter(|(on, _)| **on)
                .map(|(_, c)| c)
                .sum::<f64>();
        ss_res += w[i] * (y[i] - pred).powi(2);
        ss_tot += w[i] * (y[i] - y_mean).powi(2);
    }
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };

    Ok(SurrogateModel {
        coefficients,
        intercept,
        target_class,
        kernel_sigma: config.sigma,
        sample_count: perturbations.len(),
        selected_units: selected,
        r_squared,
    })
}

/// Units, samples and surrogate for one document.
#[derive(Debug, Clone)]
pub struct LocalFit {
    pub units: InterpretableUnits,
    pub perturbations: Vec<Perturbation>,
    pub surrogate: SurrogateModel,
}

/// Builds units from `tuples`, samples, queries the model and fits.
pub fn fit_local(
    doc: &TokenizedDoc,
    tuples: &[OntologyTuple],
    model: &dyn BlackBox,
    target_class: usize,
    config: &SurrogateConfig,
) -> Result<LocalFit> {
    config.validate()?;
    let units = build_units(doc, tuples);
    if units.is_empty() {
        return Err(Error::Fit("document has no content words".into()));
    }
    let masks = sample_perturbations(&units, config.samples, config.threshold, config.seed);
    let perturbations = perturb(doc, &units, masks, model, config.sigma)?;
    let surrogate = fit_surrogate(&perturbations, target_class, config)?;
    Ok(LocalFit {
        units,
        perturbations,
        surrogate,
    })
}

/// Scores word sets (doc token indices). Implemented by
/// [`ImportanceScorer`]; closures work too, which keeps the span logic in
/// the anchor and composition code testable on its own.
pub trait SpanScorer {
    fn score_spans(&self, spans: &[Vec<usize>]) -> Result<Vec<f64>>;

    fn score_span(&self, span: &[usize]) -> Result<f64> {
        Ok(self.score_spans(&[span.to_vec()])?[0])
    }
}

impl<F: Fn(&[usize]) -> f64> SpanScorer for F {
    fn score_spans(&self, spans: &[Vec<usize>]) -> Result<Vec<f64>> {
        spans
            .iter()
            .map(|s| if s.is_empty() { Err(Error::EmptySpan) } else { Ok(self(s)) })
            .collect()
    }
}

/// `IC(r) = c̄_r · (f(x) − f(x/r))`: the mean surrogate coefficient of the
/// units touched by `r`, times the drop in the target-class score when the
/// words of `r` are deleted.
pub struct ImportanceScorer<'a> {
    doc: &'a TokenizedDoc,
    units: &'a InterpretableUnits,
    model: &'a dyn BlackBox,
    surrogate: &'a SurrogateModel,
    base_score: f64,
}

impl<'a> ImportanceScorer<'a> {
    pub fn new(
        doc: &'a TokenizedDoc,
        units: &'a InterpretableUnits,
        model: &'a dyn BlackBox,
        surrogate: &'a SurrogateModel,
    ) -> Result<Self> {
        let base_score = model.predict(&doc.text)?.score(surrogate.target_class);
        Ok(ImportanceScorer {
            doc,
            units,
            model,
            surrogate,
            base_score,
        })
    }

    /// `f(x)` for the target class.
    pub fn base_score(&self) -> f64 {
        self.base_score
    }

    pub fn mean_coefficient(&self, tokens: &[usize]) -> f64 {
        let touched = self.units.units_touching(tokens);
        if touched.is_empty() {
            return 0.0;
        }
        touched
            .iter()
            .map(|&u| self.surrogate.coefficients[u])
            .sum::<f64>()
            / touched.len() as f64
    }
}

impl SpanScorer for ImportanceScorer<'_> {
    fn score_spans(&self, spans: &[Vec<usize>]) -> Result<Vec<f64>> {
        if spans.iter().any(Vec::is_empty) {
            return Err(Error::EmptySpan);
        }
        let means: Vec<f64> = spans.iter().map(|s| self.mean_coefficient(s)).collect();
        let live: Vec<usize> = (0..spans.len()).filter(|&i| means[i] != 0.0).collect();
        let texts: Vec<String> = live
            .iter()
            .map(|&i| {
                let deleted: BTreeSet<usize> = spans[i].iter().copied().collect();
                self.doc.delete_tokens(&deleted)
            })
            .collect();
        let predictions = self.model.predict_batch(&texts)?;
        let mut out = vec![0.0; spans.len()];
        for (&i, p) in live.iter().zip(&predictions) {
            out[i] = means[i] * (self.base_score - p.score(self.surrogate.target_class));
        }
        Ok(out)
    }
}

/// One-shot [`ImportanceScorer`] evaluation.
pub fn importance_score(
    doc: &TokenizedDoc,
    units: &InterpretableUnits,
    r: &[usize],
    model: &dyn BlackBox,
    g: &SurrogateModel,
) -> Result<f64> {
    ImportanceScorer::new(doc, units, model, g)?.score_span(r)
}

/// Renders unit `i` as its verbatim words, for reports.
pub fn unit_text(doc: &TokenizedDoc, unit: &Unit) -> String {
    unit.tokens
        .iter()
        .map(|&t| doc.tokens[t].surface.as_str())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Spans covered by a tuple unit, ascending; convenience for callers that
/// want to show which tuples a unit fused.
pub fn unit_spans(doc: &TokenizedDoc, unit: &Unit) -> Vec<UnitSpan> {
    let mut spans = Vec::new();
    let mut start = unit.tokens[0];
    let mut prev = start;
    for &t in &unit.tokens[1..] {
        if t != prev + 1 || doc.tokens[t].sent_idx != doc.tokens[prev].sent_idx {
            spans.push(doc.span(start..prev + 1));
            start = t;
        }
        prev = t;
    }
    spans.push(doc.span(start..prev + 1));
    spans
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ontology::Ontology;
    use crate::textproc::{tokenize, Stopwords};
    use crate::tuples::extract_tuples;

    const DRUG: &str = include_str!("../data/ontologies/drug_abuse.onto");
    const WORKED_TEXT: &str = "She uses orange juice and does not like weed. \
                              She knows that smoke causes addiction and headache.";

    fn labels() -> Vec<String> {
        vec!["neg".into(), "pos".into()]
    }

    fn sample(mask: Vec<bool>, y: f64, weight: f64) -> Perturbation {
        Perturbation {
            mask,
            text: String::new(),
            weight,
            scores: ScoreVector::new(vec![1.0 - y, y], labels()).unwrap(),
        }
    }

    #[test]
    fn worked_example_fuses_the_smoke_chain() {
        let o = Ontology::parse(DRUG).unwrap();
        let doc = tokenize(WORKED_TEXT, &Stopwords::builtin());
        let tuples = extract_tuples(&doc, &o, 3);
        let units = build_units(&doc, &tuples);
        let rendered: Vec<String> = units.units().iter().map(|u| unit_text(&doc, u)).collect();
        // she uses orange juice not like weed | she knows [smoke addiction headache] causes
        assert_eq!(
            rendered,
            vec![
                "She", "uses", "orange", "juice", "not", "like", "weed", "She", "knows",
                "smoke addiction headache", "causes"
            ]
        );
        assert_eq!(units.len(), 11);
        let fused = &units.units()[9];
        assert_eq!(fused.kind, UnitKind::Tuple);
        assert_eq!(unit_spans(&doc, fused).len(), 3);
    }

    #[test]
    fn no_tuples_and_stopword_docs() {
        let doc = tokenize("the and of", &Stopwords::builtin());
        assert!(build_units(&doc, &[]).is_empty());
        let doc = tokenize("alpha the beta", &Stopwords::builtin());
        let units = build_units(&doc, &[]);
        assert_eq!(units.len(), 2);
        assert!(units.units().iter().all(|u| u.kind == UnitKind::Word));
        assert_eq!(units.owner(1), None);
    }

    #[test]
    fn first_mask_keeps_everything() {
        let doc = tokenize("a b c d", &Stopwords::empty());
        let units = build_units(&doc, &[]);
        let masks = sample_perturbations(&units, 1, 0.5, 7);
        assert_eq!(masks, vec![vec![true; 4]]);
        let again = sample_perturbations(&units, 50, 0.5, 7);
        assert_eq!(again, sample_perturbations(&units, 50, 0.5, 7));
        assert_ne!(again, sample_perturbations(&units, 50, 0.5, 8));
    }

    #[test]
    fn kernel_examples() {
        assert_eq!(kernel_weight("a b c", "a b c", 0.25), 1.0);
        assert_eq!(kernel_weight("a b c", "", 0.5), (-1.0f64 / 0.25).exp());
        // x = (a:2, b:1), z = (a:1, c:1): cos = 2 / (√5 · √2)
        let cos = 2.0 / (5.0f64.sqrt() * 2.0f64.sqrt());
        let expected = (-((1.0 - cos) * (1.0 - cos)) / 0.09).exp();
        assert!((kernel_weight("a a b", "a c", 0.3) - expected).abs() < 1e-12);
    }

    #[test]
    fn constant_target_gives_zero_coefficients() {
        let masks = [[true, true, true], [false, true, false], [true, false, false], [false, false, true]];
        let samples: Vec<_> = masks.iter().map(|m| sample(m.to_vec(), 0.3, 0.7)).collect();
        let g = fit_surrogate(&samples, 1, &SurrogateConfig::default()).unwrap();
        assert!(g.coefficients.iter().all(|c| c.abs() < 1e-15));
        assert!((g.intercept - 0.3).abs() < 1e-12);
    }

    #[test]
    fn fit_errors() {
        let same: Vec<_> = (0..4).map(|_| sample(vec![true, false], 0.5, 1.0)).collect();
        assert!(matches!(
            fit_surrogate(&same, 1, &SurrogateConfig::default()),
            Err(Error::Fit(_))
        ));
        // Column 1 is constant: singular without ridge.
        let samples = vec![
            sample(vec![true, true], 0.9, 1.0),
            sample(vec![false, true], 0.1, 1.0),
        ];
        let cfg = SurrogateConfig {
            ridge: 0.0,
            ..Default::default()
        };
        assert!(matches!(fit_surrogate(&samples, 1, &cfg), Err(Error::Fit(_))));
        let g = fit_surrogate(&samples, 1, &SurrogateConfig::default()).unwrap();
        assert_eq!(g.coefficients[1], 0.0);
    }

    #[test]
    fn top_k_keeps_the_largest_units() {
        let mut samples = Vec::new();
        for bits in 0..16u32 {
            let m: Vec<bool> = (0..4).map(|j| bits >> j & 1 == 1).collect();
            let y = 0.1 + 0.5 * m[2] as u8 as f64 + 0.2 * m[0] as u8 as f64 + 0.01 * m[3] as u8 as f64;
            samples.push(sample(m, y / 1.0, 1.0));
        }
        let cfg = SurrogateConfig {
            top_k: 2,
            ridge: 0.0,
            ..Default::default()
        };
        let g = fit_surrogate(&samples, 1, &cfg).unwrap();
        assert_eq!(g.selected_units, vec![2, 0]);
        assert_eq!(g.coefficients[1], 0.0);
        assert_eq!(g.coefficients[3], 0.0);
        assert!((g.coefficients[2] - 0.5).abs() < 1e-9);
    }
}
