//! `ontoseg`: validate, index, search and serve annotated video-lesson corpora.

mod render;

use std::fs;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use ontoseg::annotations::{import_owl_subset, parse_annotation};
use ontoseg::engine::read_ontology_file;
use ontoseg::evaluation::{evaluate_run, RelevanceJudgments};
use ontoseg::indexer::save_index;
use ontoseg::ontology::load_domain_ontology;
use ontoseg::{
    infer, DomainOntology, Engine, Error, Mode, PobKind, RelationKind, SearchRequest, SegmentRef, Sources, VideoCourse,
};
use ontoseg_service::ServiceConfig;

#[derive(Parser)]
#[command(
    name = "ontoseg",
    version,
    about = "Concept-based search over annotated video lessons"
)]
struct Cli {
    /// Log level for diagnostics on stderr (error, warn, info, debug).
    #[arg(long, global = true, env = "ONTOSEG_LOG", default_value = "warn")]
    log: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check ontology and annotation files, and their alignment.
    Validate(ValidateArgs),
    /// Report asserted and inferred relations of domain ontologies.
    Infer(InferArgs),
    /// Convert an OWL-subset document to the canonical JSON format.
    ImportOwl(ImportOwlArgs),
    /// Build the concept/segment index and write it to a file.
    Index(IndexArgs),
    /// Rank the segments of a domain against a set of concepts.
    Search(SearchArgs),
    /// Show the weights behind one segment's score.
    Explain(ExplainArgs),
    /// Evaluate queries against relevance judgments.
    Eval(EvalArgs),
    /// Serve the JSON API and the web UI.
    Serve(ServeArgs),
    /// Print the concept hierarchy of a domain.
    Tree(TreeArgs),
}

#[derive(Args, Clone)]
struct CorpusArgs {
    /// Domain ontology files (JSON or OWL subset).
    #[arg(long = "ontology", required = true, num_args = 1.., env = "ONTOSEG_ONTOLOGY", value_delimiter = ',')]
    ontologies: Vec<PathBuf>,
    /// Annotation files or directories.
    #[arg(long = "annotations", num_args = 1.., env = "ONTOSEG_ANNOTATIONS", value_delimiter = ',')]
    annotations: Vec<PathBuf>,
    /// Reject unknown keys and elements instead of skipping them.
    #[arg(long)]
    strict: bool,
}

impl CorpusArgs {
    fn mode(&self) -> Mode {
        if self.strict {
            Mode::Strict
        } else {
            Mode::Lenient
        }
    }

    fn sources(&self, index: Option<PathBuf>) -> Sources {
        Sources {
            ontologies: self.ontologies.clone(),
            annotations: self.annotations.clone(),
            index,
            mode: self.mode(),
        }
    }

    fn engine(&self, index: Option<PathBuf>) -> Result<Engine> {
        let engine = Engine::load(&self.sources(index))?;
        for w in engine.warnings() {
            log::warn!("{w}");
        }
        Ok(engine)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum SearchFormat {
    Text,
    Json,
    Html,
}

#[derive(Clone, Copy, ValueEnum)]
enum EvalFormat {
    Table,
    Csv,
    Json,
}

#[derive(Args)]
struct ValidateArgs {
    /// Files to check; the kind of each is detected from its content.
    #[arg(required = true)]
    files: Vec<PathBuf>,
    #[arg(long)]
    strict: bool,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Args)]
struct InferArgs {
    #[arg(long = "ontology", required = true, num_args = 1..)]
    ontologies: Vec<PathBuf>,
    #[arg(long)]
    strict: bool,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args)]
struct ImportOwlArgs {
    file: PathBuf,
    /// Write the JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct IndexArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long)]
    out: PathBuf,
    /// Also write per-(concept, segment) statistics as CSV.
    #[arg(long)]
    stats_csv: Option<PathBuf>,
}

#[derive(Args)]
struct SearchArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    /// Prebuilt index; rebuilt from the corpus when absent.
    #[arg(long, env = "ONTOSEG_INDEX")]
    index: Option<PathBuf>,
    /// Defaults to the only loaded domain.
    #[arg(long)]
    domain: Option<String>,
    #[arg(long, required = true, value_delimiter = ',')]
    concepts: Vec<String>,
    #[arg(long)]
    pob: Option<PobKind>,
    #[arg(long, value_delimiter = ',')]
    expand: Vec<RelationKind>,
    #[arg(long)]
    top: Option<usize>,
    #[arg(long, value_enum, default_value = "text")]
    format: SearchFormat,
    /// Same as `--format html`.
    #[arg(long, conflicts_with = "format")]
    html: bool,
}

#[derive(Args)]
struct ExplainArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long, env = "ONTOSEG_INDEX")]
    index: Option<PathBuf>,
    #[arg(long)]
    lesson: String,
    #[arg(long)]
    segment: String,
    #[arg(long, required = true, value_delimiter = ',')]
    concepts: Vec<String>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long, env = "ONTOSEG_INDEX")]
    index: Option<PathBuf>,
    /// Tab-separated `query_id lesson_id segment_id` lines.
    #[arg(long)]
    qrels: PathBuf,
    /// JSON manifest of the judged queries.
    #[arg(long)]
    queries: PathBuf,
    /// Cut-offs for precision@k.
    #[arg(long, value_delimiter = ',', default_value = "5,10")]
    k: Vec<usize>,
    #[arg(long, value_enum, default_value = "table")]
    format: EvalFormat,
}

#[derive(Args)]
struct ServeArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long, env = "ONTOSEG_INDEX")]
    index: Option<PathBuf>,
    #[arg(long, env = "ONTOSEG_BIND", default_value = "127.0.0.1:8080")]
    bind: SocketAddr,
    /// Built web UI directory served at `/`.
    #[arg(long = "static", env = "ONTOSEG_STATIC")]
    static_dir: Option<PathBuf>,
}

#[derive(Args)]
struct TreeArgs {
    #[arg(long = "ontology", required = true, num_args = 1.., env = "ONTOSEG_ONTOLOGY", value_delimiter = ',')]
    ontologies: Vec<PathBuf>,
    /// Defaults to the only loaded domain.
    #[arg(long)]
    domain: Option<String>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .parse_filters(&cli.log)
        .format_target(false)
        .init();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Validate(a) => validate(a),
        Command::Infer(a) => infer_cmd(a),
        Command::ImportOwl(a) => import_owl(a),
        Command::Index(a) => index(a),
        Command::Search(a) => search(a),
        Command::Explain(a) => explain(a),
        Command::Eval(a) => eval(a),
        Command::Serve(a) => serve(a),
        Command::Tree(a) => tree(a),
    }
}

fn emit(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes())?;
    if !text.ends_with('\n') {
        out.write_all(b"\n")?;
    }
    Ok(())
}

fn mode(strict: bool) -> Mode {
    if strict {
        Mode::Strict
    } else {
        Mode::Lenient
    }
}

fn single_domain<'a>(requested: Option<String>, mut ids: impl Iterator<Item = &'a str>) -> Result<String> {
    if let Some(d) = requested {
        return Ok(d);
    }
    match (ids.next(), ids.next()) {
        (Some(only), None) => Ok(only.to_string()),
        (None, _) => bail!("no domain ontology loaded"),
        _ => bail!("several domains are loaded; pick one with --domain"),
    }
}

enum Loaded {
    Ontology(DomainOntology),
    Course(VideoCourse),
    Both(DomainOntology, VideoCourse),
}

fn load_any(path: &Path, mode: Mode) -> Result<Loaded> {
    let text = fs::read_to_string(path).with_context(|| format!("{}", path.display()))?;
    let parsed = if text.trim_start().starts_with('<') {
        let imported = import_owl_subset(&text, mode).with_context(|| format!("{}", path.display()))?;
        for w in &imported.warnings {
            log::warn!("{}: {w}", path.display());
        }
        match (imported.value.ontology, imported.value.course) {
            (Some(o), Some(c)) => Loaded::Both(o, c),
            (Some(o), None) => Loaded::Ontology(o),
            (None, Some(c)) => Loaded::Course(c),
            (None, None) => return Err(Error::NoOwlContent).with_context(|| format!("{}", path.display())),
        }
    } else {
        let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| {
            anyhow::anyhow!(
                "{}: syntax error at line {}, column {}: {e}",
                path.display(),
                e.line(),
                e.column()
            )
        })?;
        let ctx = || format!("{}", path.display());
        if value.get("course_id").is_some() {
            let p = parse_annotation(&text, mode).with_context(ctx)?;
            for w in &p.warnings {
                log::warn!("{}: {w}", path.display());
            }
            Loaded::Course(p.value)
        } else if value.get("concepts").is_some() {
            let p = load_domain_ontology(&text, mode).with_context(ctx)?;
            for w in &p.warnings {
                log::warn!("{}: {w}", path.display());
            }
            Loaded::Ontology(p.value)
        } else {
            bail!("{}: neither an ontology nor an annotation document", path.display());
        }
    };
    Ok(parsed)
}

#[derive(serde::Serialize)]
struct ValidatedFile {
    path: String,
    kind: &'static str,
    id: String,
    detail: String,
}

fn validate(a: ValidateArgs) -> Result<()> {
    let mut ontologies = Vec::new();
    let mut courses = Vec::new();
    let mut report = Vec::new();
    for path in &a.files {
        let display = path.display().to_string();
        let mut push_ontology = |o: DomainOntology, report: &mut Vec<ValidatedFile>| {
            let facts = infer(&o);
            for v in facts.violations() {
                log::warn!("{display}: {v}");
            }
            report.push(ValidatedFile {
                path: display.clone(),
                kind: "ontology",
                id: o.domain_id.clone(),
                detail: format!("{} concepts, {} edges", o.concepts.len(), o.edges.len()),
            });
            ontologies.push(o);
        };
        let course_entry = |c: &VideoCourse| ValidatedFile {
            path: display.clone(),
            kind: "course",
            id: c.id.clone(),
            detail: format!(
                "{} lessons, {} segments",
                c.lessons.len(),
                c.lessons.iter().map(|l| l.segments.len()).sum::<usize>()
            ),
        };
        match load_any(path, mode(a.strict))? {
            Loaded::Ontology(o) => push_ontology(o, &mut report),
            Loaded::Course(c) => {
                report.push(course_entry(&c));
                courses.push((display.clone(), c));
            }
            Loaded::Both(o, c) => {
                push_ontology(o, &mut report);
                report.push(course_entry(&c));
                courses.push((display.clone(), c));
            }
        }
    }
    for (path, course) in &courses {
        match ontologies.iter().find(|o| o.domain_id == course.domain_id) {
            Some(o) => course.check_alignment(o).with_context(|| path.clone())?,
            None if ontologies.is_empty() => {
                log::warn!("{path}: no ontology given, concept alignment not checked")
            }
            None => bail!("{path}: {}", Error::UnknownDomain(course.domain_id.clone())),
        }
    }
    match a.format {
        Format::Json => emit(&serde_json::to_string(&report)?),
        Format::Text => {
            let mut out = String::new();
            for f in &report {
                out.push_str(&format!("{}: {} `{}` ({})\n", f.path, f.kind, f.id, f.detail));
            }
            out.push_str("OK\n");
            emit(&out)
        }
    }
}

fn infer_cmd(a: InferArgs) -> Result<()> {
    let mut reports = Vec::new();
    for path in &a.ontologies {
        let o = read_ontology_file(path, mode(a.strict))?;
        for w in &o.warnings {
            log::warn!("{}: {w}", path.display());
        }
        reports.push(infer(&o.value).report(&o.value));
    }
    match a.format {
        Format::Json => emit(&serde_json::to_string_pretty(&reports)?),
        Format::Text => emit(
            &reports
                .iter()
                .map(render::inference_text)
                .collect::<Vec<_>>()
                .join("\n"),
        ),
    }
}

fn import_owl(a: ImportOwlArgs) -> Result<()> {
    let text = fs::read_to_string(&a.file).with_context(|| format!("{}", a.file.display()))?;
    let imported = import_owl_subset(&text, mode(a.strict)).with_context(|| format!("{}", a.file.display()))?;
    for w in &imported.warnings {
        log::warn!("{}: {w}", a.file.display());
    }
    let json = match (imported.value.ontology, imported.value.course) {
        (Some(o), None) => o.to_json(),
        (None, Some(c)) => c.to_json(),
        (Some(o), Some(c)) => serde_json::to_string_pretty(&serde_json::json!({ "ontology": o, "course": c }))?,
        (None, None) => bail!("{}: {}", a.file.display(), Error::NoOwlContent),
    };
    match a.out {
        Some(path) => fs::write(&path, json + "\n").with_context(|| format!("{}", path.display())),
        None => emit(&json),
    }
}

fn index(a: IndexArgs) -> Result<()> {
    let engine = a.corpus.engine(None)?;
    if engine.corpus().segment_count() == 0 {
        return Err(Error::EmptyCorpus.into());
    }
    let mut bytes = Vec::new();
    save_index(engine.index(), &mut bytes)?;
    fs::write(&a.out, &bytes).with_context(|| format!("{}", a.out.display()))?;
    if let Some(path) = &a.stats_csv {
        let file = fs::File::create(path).with_context(|| format!("{}", path.display()))?;
        engine.index().write_stats_csv(std::io::BufWriter::new(file))?;
    }
    log::info!(
        "indexed {} segments, {} weights into {}",
        engine.corpus().segment_count(),
        engine.index().weights().len(),
        a.out.display()
    );
    Ok(())
}

fn search(a: SearchArgs) -> Result<()> {
    let engine = a.corpus.engine(a.index.clone())?;
    let domain_id = single_domain(a.domain, engine.ontologies().map(|o| o.domain_id.as_str()))?;
    let req = SearchRequest {
        domain_id,
        concepts: a.concepts,
        pob: a.pob,
        expand: a.expand,
        top: a.top,
    };
    let response = engine.search(&req)?;
    let format = if a.html { SearchFormat::Html } else { a.format };
    match format {
        SearchFormat::Json => emit(&serde_json::to_string(&response)?),
        SearchFormat::Text => emit(&render::search_text(&response.results)),
        SearchFormat::Html => {
            let title = format!("{}: {}", req.domain_id, req.concepts.join(", "));
            emit(&render::search_html(&title, &response.results))
        }
    }
}

fn explain(a: ExplainArgs) -> Result<()> {
    let engine = a.corpus.engine(a.index.clone())?;
    let e = engine.explain(&SegmentRef::new(a.lesson, a.segment), &a.concepts)?;
    match a.format {
        Format::Json => emit(&serde_json::to_string(&e)?),
        Format::Text => emit(&render::explain_text(&e)),
    }
}

fn eval(a: EvalArgs) -> Result<()> {
    let engine = a.corpus.engine(a.index.clone())?;
    let qrels = fs::read_to_string(&a.qrels).with_context(|| format!("{}", a.qrels.display()))?;
    let queries = fs::read_to_string(&a.queries).with_context(|| format!("{}", a.queries.display()))?;
    let judgments = RelevanceJudgments::parse(&qrels, &queries)?;
    let table = evaluate_run(&judgments, &engine, &a.k)?;
    for w in &table.warnings {
        log::warn!("{w}");
    }
    for q in &table.queries {
        if let Some(err) = &q.error {
            log::warn!("query {}: {err}", q.query_id);
        }
    }
    match a.format {
        EvalFormat::Json => emit(&serde_json::to_string_pretty(&table)?),
        EvalFormat::Csv => emit(&table.to_csv()),
        EvalFormat::Table => emit(&table.to_pretty()),
    }
}

fn serve(a: ServeArgs) -> Result<()> {
    let config = ServiceConfig {
        bind: a.bind,
        sources: a.corpus.sources(a.index),
        static_dir: a.static_dir,
    };
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(ontoseg_service::serve(config))?;
    Ok(())
}

fn tree(a: TreeArgs) -> Result<()> {
    let mut ontologies = Vec::new();
    for path in &a.ontologies {
        let o = read_ontology_file(path, Mode::Lenient)?;
        for w in &o.warnings {
            log::warn!("{}: {w}", path.display());
        }
        ontologies.push(o.value);
    }
    let domain = single_domain(a.domain, ontologies.iter().map(|o| o.domain_id.as_str()))?;
    let o = ontologies
        .iter()
        .find(|o| o.domain_id == domain)
        .ok_or_else(|| Error::UnknownDomain(domain.clone()))?;
    let tree = ontoseg::ontology::concept_tree(o);
    match a.format {
        Format::Json => emit(&serde_json::to_string(&tree)?),
        Format::Text => emit(&format!("{}\n{}", o.label, tree.to_outline())),
    }
}
