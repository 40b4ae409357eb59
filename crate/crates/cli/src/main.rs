mod config;

use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{ArgMatches, Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use onml::anchors::AnchorSeedSet;
use onml::blackbox::{BlackBox, ExternalModel, ModelHandle, TfidfClassifier, TrainConfig};
use onml::corpus::LabeledCorpus;
use onml::eval::{emit_report, render_report, run_eval, EvalConfig, ReportFormat, Variant};
use onml::ontology::{self, load_ontology, Ontology};
use onml::pipeline::{DocumentExplanation, ExplainConfig, Explainer};
use onml::surrogate::SurrogateConfig;
use onml::synth::{keyword_corpus, planted_corpus, PlantedConfig};
use onml::textproc::{tokenize, Stopwords};
use onml::triplex::{load_triplexes, TriplexIndex, DEFAULT_MIN_CONFIDENCE};
use onml::tuples::extract_tuples;
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "onml", version, about = "Ontology-guided explanations for text classifiers")]
struct Cli {
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// TOML file with defaults for any flag.
    #[arg(long, global = true, env = "ONML_CONFIG")]
    config: Option<PathBuf>,

    /// Log more (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Train the built-in TF-IDF logistic classifier.
    Train(TrainArgs),
    /// Explain the prediction for one or more documents.
    Explain(ExplainArgs),
    /// List ontology tuples found in a text.
    Tuples(TuplesArgs),
    /// Word-deletion evaluation of every explanation variant.
    Eval(EvalArgs),
    /// Ontology file utilities.
    #[command(subcommand)]
    Ontology(OntologyCmd),
    /// Build an ontology file from concept and relation CSV exports.
    ConvertOntology(ConvertArgs),
    /// Write a synthetic labeled corpus.
    Synth(SynthArgs),
    /// Serve a built-in model over the external adapter protocol on stdio.
    Serve(ServeArgs),
}

#[derive(Subcommand, Debug)]
enum OntologyCmd {
    /// Parse and check an ontology file.
    #[command(args_override_self = true)]
    Validate {
        /// Ontology file, or `builtin:<name>`.
        path: String,
    },
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct TrainArgs {
    /// Labeled corpus, one JSON record per line.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Where to write the model.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    l2: Option<f64>,
    #[arg(long)]
    min_per_class: Option<usize>,
    /// Stopword list, one word per line.
    #[arg(long)]
    stopwords: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct ModelArgs {
    /// Built-in model file written by `train`.
    #[arg(long, conflicts_with = "adapter")]
    model: Option<PathBuf>,
    /// Program speaking the adapter protocol.
    #[arg(long)]
    adapter: Option<String>,
    /// Argument for the adapter program (repeatable).
    #[arg(long, allow_hyphen_values = true)]
    adapter_arg: Vec<String>,
    /// Per-response timeout for the adapter.
    #[arg(long, default_value_t = 30_000)]
    adapter_timeout_ms: u64,
}

impl ModelArgs {
    fn load(&self) -> Result<ModelHandle> {
        match (&self.model, &self.adapter) {
            (Some(path), _) => Ok(ModelHandle::Builtin(
                TfidfClassifier::load(path).with_context(|| format!("loading model {}", path.display()))?,
            )),
            (None, Some(program)) => Ok(ModelHandle::External(ExternalModel::spawn(
                program,
                &self.adapter_arg,
                Duration::from_millis(self.adapter_timeout_ms),
            )?)),
            (None, None) => bail!("no model: pass --model or --adapter"),
        }
    }
}

#[derive(Args, Debug, Clone)]
struct PipelineArgs {
    /// Ontology file, or `builtin:drug_abuse` / `builtin:consumer_complaint`.
    #[arg(long)]
    ontology: Option<String>,
    /// Triplexes, one JSON object per line.
    #[arg(long)]
    triplexes: Option<PathBuf>,
    /// Drop triplexes at or below this confidence.
    #[arg(long)]
    min_confidence: Option<f64>,
    /// Also run the built-in verb-lexicon triplex extractor.
    #[arg(long)]
    builtin_triplexes: bool,
    /// Perturbation samples.
    #[arg(long)]
    samples: Option<usize>,
    /// Kernel width.
    #[arg(long)]
    sigma: Option<f64>,
    /// Unit drop threshold for sampling.
    #[arg(long)]
    threshold: Option<f64>,
    /// Maximum in-sentence distance for tuples.
    #[arg(long)]
    gamma: Option<usize>,
    /// Ridge penalty for the surrogate.
    #[arg(long)]
    ridge: Option<f64>,
    /// Sample words independently instead of fusing tuples.
    #[arg(long)]
    lime_mode: bool,
    /// Skip anchor learning.
    #[arg(long)]
    no_anchors: bool,
}

impl PipelineArgs {
    fn explain_config(&self, seed: u64, top_k: Option<usize>) -> Result<ExplainConfig> {
        let d = ExplainConfig::default();
        let s = SurrogateConfig::default();
        let cfg = ExplainConfig {
            gamma: self.gamma.unwrap_or(d.gamma),
            surrogate: SurrogateConfig {
                samples: self.samples.unwrap_or(s.samples),
                sigma: self.sigma.unwrap_or(s.sigma),
                threshold: self.threshold.unwrap_or(s.threshold),
                ridge: self.ridge.unwrap_or(s.ridge),
                top_k: top_k.unwrap_or(s.top_k),
                seed,
            },
            lime_mode: self.lime_mode,
            anchors: !self.no_anchors,
            min_confidence: self.min_confidence.unwrap_or(DEFAULT_MIN_CONFIDENCE),
            builtin_triplexes: self.builtin_triplexes,
        };
        cfg.surrogate.validate()?;
        Ok(cfg)
    }

    fn ontology(&self) -> Result<Ontology> {
        resolve_ontology(self.ontology.as_deref().context("no ontology: pass --ontology")?)
    }

    fn triplexes(&self, min_confidence: f64) -> Result<TriplexIndex> {
        match &self.triplexes {
            Some(p) => Ok(load_triplexes(p, min_confidence)?),
            None => Ok(TriplexIndex::default()),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum ExplainFormat {
    Text,
    Json,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct ExplainArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Text to explain.
    #[arg(long, conflicts_with_all = ["input", "corpus"])]
    text: Option<String>,
    /// Plain-text file to explain as one document.
    #[arg(long, conflicts_with = "corpus")]
    input: Option<PathBuf>,
    /// Corpus file; every record is explained.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Units kept in the surrogate.
    #[arg(long)]
    top_k: Option<usize>,
    /// Anchor seed phrases, one per line.
    #[arg(long)]
    anchors_file: Option<PathBuf>,
    /// Stopword list, one word per line.
    #[arg(long)]
    stopwords: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ExplainFormat::Text)]
    format: ExplainFormat,
    /// Write here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct TuplesArgs {
    #[arg(long)]
    ontology: Option<String>,
    #[arg(long)]
    text: Option<String>,
    #[arg(long, conflicts_with = "text")]
    input: Option<PathBuf>,
    #[arg(long)]
    gamma: Option<usize>,
    #[arg(long)]
    stopwords: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct EvalArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Labeled test corpus.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Explanations deleted per document; a list runs a sweep.
    #[arg(long, value_delimiter = ',')]
    top_k: Option<Vec<usize>>,
    /// Units kept in the surrogate.
    #[arg(long)]
    surrogate_top_k: Option<usize>,
    /// Variants to evaluate.
    #[arg(long, value_delimiter = ',')]
    variants: Option<Vec<String>>,
    /// structured (json), table or html.
    #[arg(long, default_value = "table")]
    format: String,
    /// Write the report here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct ConvertArgs {
    #[arg(long)]
    concepts: Option<PathBuf>,
    #[arg(long)]
    relations: Option<PathBuf>,
    #[arg(long)]
    name: Option<String>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum SynthKind {
    /// Label driven by a behavior/drug keyword pair.
    Planted,
    /// Label driven by a single keyword.
    Keyword,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct SynthArgs {
    #[arg(long, value_enum, default_value_t = SynthKind::Planted)]
    kind: SynthKind,
    /// Number of documents.
    #[arg(long, default_value_t = 600)]
    docs: usize,
    #[arg(long)]
    output: Option<PathBuf>,
    /// Also write the matching ontology (planted only).
    #[arg(long)]
    ontology_output: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct ServeArgs {
    #[arg(long)]
    model: Option<PathBuf>,
}

fn resolve_ontology(spec: &str) -> Result<Ontology> {
    match spec.strip_prefix("builtin:") {
        Some(name) => ontology::shipped(name)
            .with_context(|| format!("no bundled ontology {name:?}; have {:?}", ontology::SHIPPED)),
        None => load_ontology(spec).with_context(|| format!("loading ontology {spec}")),
    }
}

fn stopwords(path: Option<&Path>) -> Result<Stopwords> {
    Ok(match path {
        Some(p) => Stopwords::load(p)?,
        None => Stopwords::builtin(),
    })
}

fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            Ok(out.flush()?)
        }
    }
}

fn required<'a, T>(v: &'a Option<T>, flag: &str) -> Result<&'a T> {
    v.as_ref().with_context(|| format!("missing --{flag} (flag or config file)"))
}

fn train(args: TrainArgs) -> Result<()> {
    let corpus = LabeledCorpus::load(required(&args.corpus, "corpus")?)?;
    let output = required(&args.output, "output")?;
    let d = TrainConfig::default();
    let cfg = TrainConfig {
        epochs: args.epochs.unwrap_or(d.epochs),
        learning_rate: args.learning_rate.unwrap_or(d.learning_rate),
        l2: args.l2.unwrap_or(d.l2),
        min_per_class: args.min_per_class.unwrap_or(d.min_per_class),
    };
    let model = TfidfClassifier::train(&corpus, &cfg, &stopwords(args.stopwords.as_deref())?)?;
    model.save(output)?;
    let correct = corpus
        .records()
        .iter()
        .filter(|r| model.predict(&r.text).is_ok_and(|s| s.predicted_label() == r.label))
        .count();
    eprintln!(
        "trained on {} docs, {} labels, vocabulary {}; training accuracy {:.4}",
        corpus.len(),
        model.labels().len(),
        model.vocabulary().len(),
        correct as f64 / corpus.len() as f64
    );
    Ok(())
}

fn render_explanation(out: &mut String, e: &DocumentExplanation) {
    use std::fmt::Write as _;
    let _ = writeln!(
        out,
        "{}: predicted {} ({:.4})",
        e.doc_id,
        e.predicted_label,
        e.prediction.score(e.target_class)
    );
    if e.explanations.is_empty() {
        let _ = writeln!(out, "  no explanations");
    }
    for x in &e.explanations {
        let mut sources = Vec::new();
        if !x.provenance.ontology.is_empty() {
            sources.push("ontology");
        }
        if x.provenance.anchor.is_some() {
            sources.push("anchor");
        }
        if !x.provenance.triplexes.is_empty() {
            sources.push("triplex");
        }
        let _ = writeln!(
            out,
            "  {:>2}. {:+.6}  sentence {}  \"{}\"  [{}]",
            x.rank,
            x.score,
            x.sentence + 1,
            x.text,
            sources.join("+")
        );
    }
}

fn explain(args: ExplainArgs, seed: u64) -> Result<()> {
    let model = args.model.load()?;
    let cfg = args.pipeline.explain_config(seed, args.top_k)?;
    let onto = args.pipeline.ontology()?;
    let triplexes = args.pipeline.triplexes(cfg.min_confidence)?;
    let mut explainer = Explainer::new(&onto, &model, cfg).with_stopwords(stopwords(args.stopwords.as_deref())?);
    if let Some(p) = &args.anchors_file {
        explainer = explainer.with_seeds(AnchorSeedSet::load(p)?);
    }

    let docs: Vec<(String, String)> = match (&args.text, &args.input, &args.corpus) {
        (Some(t), _, _) => vec![("text".into(), t.clone())],
        (None, Some(p), _) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            let id = p.file_stem().map_or("input".into(), |s| s.to_string_lossy().into_owned());
            vec![(id, text)]
        }
        (None, None, Some(p)) => LabeledCorpus::load(p)?
            .records()
            .iter()
            .map(|r| (r.id.clone(), r.text.clone()))
            .collect(),
        _ => bail!("nothing to explain: pass --text, --input or --corpus"),
    };

    let mut results = Vec::with_capacity(docs.len());
    for (id, text) in &docs {
        results.push(explainer.explain(id, text, triplexes.get(id))?);
    }
    let text = match args.format {
        ExplainFormat::Json if results.len() == 1 => serde_json::to_string_pretty(&results[0])? + "\n",
        ExplainFormat::Json => serde_json::to_string_pretty(&results)? + "\n",
        ExplainFormat::Text => {
            let mut out = String::new();
            for r in &results {
                render_explanation(&mut out, r);
            }
            out
        }
    };
    write_out(args.output.as_deref(), &text)
}

#[derive(Serialize)]
struct TupleRow<'a> {
    sentence: usize,
    first: &'a str,
    second: &'a str,
    source_concept: &'a str,
    target_concept: &'a str,
    distance: usize,
}

fn tuples(args: TuplesArgs) -> Result<()> {
    let onto = resolve_ontology(required(&args.ontology, "ontology")?)?;
    let text = match (&args.text, &args.input) {
        (Some(t), _) => t.clone(),
        (None, Some(p)) => std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
        (None, None) => bail!("pass --text or --input"),
    };
    let doc = tokenize(&text, &stopwords(args.stopwords.as_deref())?);
    let found = extract_tuples(&doc, &onto, args.gamma.unwrap_or(ExplainConfig::default().gamma));
    let rows: Vec<TupleRow> = found
        .iter()
        .map(|t| TupleRow {
            sentence: t.sentence(),
            first: &t.first.phrase,
            second: &t.second.phrase,
            source_concept: &t.source_concept,
            target_concept: &t.target_concept,
            distance: t.distance,
        })
        .collect();
    write_out(None, &(serde_json::to_string_pretty(&rows)? + "\n"))
}

fn eval(args: EvalArgs, seed: u64) -> Result<()> {
    let model = args.model.load()?;
    let explain = args.pipeline.explain_config(seed, args.surrogate_top_k)?;
    let onto = args.pipeline.ontology()?;
    let triplexes = args.pipeline.triplexes(explain.min_confidence)?;
    let corpus = LabeledCorpus::load(required(&args.corpus, "corpus")?)?;
    let d = EvalConfig::default();
    let variants = match &args.variants {
        Some(names) => names.iter().map(|n| n.parse()).collect::<onml::Result<Vec<Variant>>>()?,
        None => d.variants,
    };
    let cfg = EvalConfig {
        top_k: args.top_k.clone().unwrap_or(d.top_k),
        variants,
        seed,
        explain,
    };
    let format: ReportFormat = args.format.parse()?;
    let report = run_eval(&corpus, &model, &model.fingerprint(), &onto, &triplexes, &cfg)?;
    match &args.output {
        Some(p) => emit_report(&report, format, p)?,
        None => write_out(None, &render_report(&report, format)?)?,
    }
    Ok(())
}

fn validate(path: &str) -> Result<()> {
    let o = resolve_ontology(path)?;
    println!(
        "{}: {} concepts, {} terms, {} relations",
        if o.name().is_empty() { path } else { o.name() },
        o.concepts().len(),
        o.term_count(),
        o.relations().len()
    );
    Ok(())
}

fn convert(args: ConvertArgs) -> Result<()> {
    let read = |p: &PathBuf| std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()));
    let concepts = read(required(&args.concepts, "concepts")?)?;
    let relations = read(required(&args.relations, "relations")?)?;
    let name = args.name.clone().unwrap_or_default();
    let o = Ontology::from_csv(&name, &concepts, &relations)?;
    write_out(args.output.as_deref(), &o.to_file_string())
}

fn synth(args: SynthArgs, seed: u64) -> Result<()> {
    let corpus = match args.kind {
        SynthKind::Planted => planted_corpus(args.docs, seed, &PlantedConfig::default()),
        SynthKind::Keyword => keyword_corpus(args.docs, seed),
    };
    write_out(args.output.as_deref(), &corpus.to_jsonl())?;
    if let Some(p) = &args.ontology_output {
        if args.kind != SynthKind::Planted {
            bail!("--ontology-output only applies to --kind planted");
        }
        onml::synth::planted_ontology().save(p)?;
    }
    Ok(())
}

fn serve(args: ServeArgs) -> Result<()> {
    let model = TfidfClassifier::load(required(&args.model, "model")?)?;
    let stdin = std::io::stdin();
    onml::blackbox::serve(&model, BufReader::new(stdin.lock()), std::io::stdout().lock())?;
    Ok(())
}

fn subcommand_path(m: &ArgMatches) -> Vec<String> {
    let mut path = Vec::new();
    let mut cur = m;
    while let Some((name, sub)) = cur.subcommand() {
        path.push(name.to_string());
        cur = sub;
    }
    path
}

fn parse() -> Result<Cli> {
    let argv: Vec<String> = std::env::args().collect();
    let cmd = Cli::command();
    let matches = cmd.clone().get_matches_from(&argv);
    let Some(path) = matches.get_one::<PathBuf>("config") else {
        return Ok(Cli::from_arg_matches(&matches)?);
    };
    let merged = config::splice(&cmd, &argv, path, &subcommand_path(&matches))?;
    Ok(Cli::from_arg_matches(&cmd.get_matches_from(merged))?)
}

fn main() {
    let cli = match parse() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(2);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let seed = cli.seed;
    let result = match cli.command {
        Cmd::Train(a) => train(a),
        Cmd::Explain(a) => explain(a, seed),
        Cmd::Tuples(a) => tuples(a),
        Cmd::Eval(a) => eval(a, seed),
        Cmd::Ontology(OntologyCmd::Validate { path }) => validate(&path),
        Cmd::ConvertOntology(a) => convert(a),
        Cmd::Synth(a) => synth(a, seed),
        Cmd::Serve(a) => serve(a),
    };
    if let Err(e) = result {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
