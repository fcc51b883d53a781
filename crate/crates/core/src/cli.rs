//! Command-line front end.
//!
//! Exit status: 0 on success, 1 when a command fails on its data, 2 on usage
//! errors.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::eval::{run_eval, summary_markdown, write_report, Method, QueryGroupSpec};
use crate::ingest::{load_corpus, load_raw_corpus, write_corpus, LabelDictionary};
use crate::model::Query;
use crate::resolve::{resolve_corpus, ErMode, GeocodeCache};
use crate::search::{IndexBundle, ScoredResult, Scorer, SearchIndex};
use crate::synth::{generate_corpus, SynthSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "w5h", version, about = "Search personal digital traces by what, who, when, where and how")]
pub struct Cli {
    /// JSON configuration file; command-line flags override its values
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output format for results printed to stdout
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Worker threads (defaults to one per core)
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert service exports into canonical JSON Lines trace objects
    Ingest(IngestArgs),
    /// Resolve people and places into canonical entities
    Resolve(ResolveArgs),
    /// Build the frequency and text indexes of a resolved corpus
    Index(IndexArgs),
    /// Rank the objects of a corpus against a query
    Search(SearchArgs),
    /// Run the known-item evaluation and write a report directory
    Eval(EvalArgs),
    /// Generate a synthetic corpus with its ground truth
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Input files: raw records (with --dict) or canonical JSON Lines
    #[arg(long, required = true, num_args = 1..)]
    pub input: Vec<PathBuf>,
    /// Label dictionary; without one the input must already be canonical
    #[arg(long)]
    pub dict: Option<PathBuf>,
    /// Where to write the canonical corpus
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct ResolveArgs {
    /// Canonical corpus to resolve
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Geocode cache: place text -> candidate addresses
    #[arg(long)]
    pub geocache: Option<PathBuf>,
    /// Where to write the resolved corpus
    #[arg(long)]
    pub output: PathBuf,
    /// Also write the resolved people and places here
    #[arg(long)]
    pub entities: Option<PathBuf>,
    /// Treat every literal name or email as its own person
    #[arg(long)]
    pub no_er: bool,
}

#[derive(Debug, Args)]
pub struct IndexArgs {
    /// Resolved corpus
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Where to write the index file
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    /// Query file in the canonical query shape
    #[arg(long)]
    pub query: PathBuf,
    /// Resolved corpus the index was built from
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Index file
    #[arg(long)]
    pub index: Option<PathBuf>,
    /// One of w5hf, fieldbm25, bm25, tfidf
    #[arg(long, default_value = "w5hf")]
    pub scorer: String,
    /// Number of results to print
    #[arg(long, default_value_t = 20)]
    pub top: usize,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Resolved corpus the index was built from
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Index file
    #[arg(long)]
    pub index: Option<PathBuf>,
    /// Query groups, comma separated (1 to 5)
    #[arg(long, value_delimiter = ',')]
    pub groups: Option<Vec<u8>>,
    /// Scorers, comma separated
    #[arg(long, value_delimiter = ',')]
    pub scorers: Option<Vec<String>>,
    /// Seed for query generation
    #[arg(long)]
    pub seed: Option<u64>,
    /// Report directory
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Generator settings; defaults apply when omitted
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Where to write the corpus
    #[arg(long)]
    pub out: PathBuf,
    /// Where to write the ground truth
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

/// A command failure: usage problems exit with 2, data problems with 1.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Data(e)
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Data(e.into())
    }
}

fn pick(flag: &Option<PathBuf>, configured: &Option<PathBuf>, name: &str) -> std::result::Result<PathBuf, Failure> {
    flag.clone()
        .or_else(|| configured.clone())
        .ok_or_else(|| Failure::Usage(format!("--{name} is required (or set paths.{name} in the config)")))
}

fn load_searchable(corpus: &Path, index: &Path, config: &Config) -> Result<SearchIndex> {
    let objects = load_corpus(corpus)?;
    let bundle = IndexBundle::load(index, &objects, &config.index_hash())?;
    Ok(SearchIndex::new(objects, bundle.freq, bundle.text, config.scoring))
}

fn render_results(results: &[ScoredResult], format: Format) -> Result<String> {
    if format == Format::Json {
        return Ok(serde_json::to_string_pretty(results)? + "\n");
    }
    let mut s = String::new();
    let _ = writeln!(s, "{:>4}  {:<24} {:>12}  terms", "rank", "id", "score");
    for (i, r) in results.iter().enumerate() {
        let _ = writeln!(s, "{:>4}  {:<24} {:>12.4}", i + 1, r.object_id, r.total_score);
        for (k, v) in &r.breakdown {
            let _ = writeln!(s, "{:>44}  {k} = {v:.4}", "");
        }
    }
    Ok(s)
}

fn execute(cli: Cli, out: &mut dyn std::io::Write) -> std::result::Result<(), Failure> {
    let config = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::Usage("--threads must be at least 1".into()));
        }
        // a second call in the same process fails harmlessly
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let write = |out: &mut dyn std::io::Write, s: &str| -> std::result::Result<(), Failure> {
        out.write_all(s.as_bytes()).map_err(|e| Failure::Data(Error::io(Path::new("<stdout>"), e)))
    };

    match cli.command {
        Command::Ingest(a) => {
            let dict_path = a.dict.clone().or_else(|| config.paths.dictionary.clone());
            let (objects, unmapped, warnings) = match dict_path {
                Some(d) => {
                    let dict = LabelDictionary::load(&d)?;
                    let inputs: Vec<&Path> = a.input.iter().map(PathBuf::as_path).collect();
                    let r = load_raw_corpus(&inputs, &dict)?;
                    (r.objects, r.unmapped, r.warnings)
                }
                None => {
                    let mut all = Vec::new();
                    for p in &a.input {
                        all.extend(load_corpus(p)?);
                    }
                    let mut ids = std::collections::BTreeSet::new();
                    if let Some(o) = all.iter().find(|o| !ids.insert(o.id.clone())) {
                        return Err(Error::DuplicateId(o.id.clone()).into());
                    }
                    (all, Default::default(), Vec::new())
                }
            };
            write_corpus(&objects, &a.output)?;
            let msg = match cli.format {
                Format::Json => serde_json::json!({
                    "objects": objects.len(), "unmapped_labels": unmapped, "warnings": warnings.len()
                })
                .to_string() + "\n",
                Format::Text => {
                    let mut s = format!("{} objects -> {}\n", objects.len(), a.output.display());
                    for (label, n) in &unmapped {
                        let _ = writeln!(s, "unmapped label {label:?}: {n}");
                    }
                    if !warnings.is_empty() {
                        let _ = writeln!(s, "{} warnings", warnings.len());
                    }
                    s
                }
            };
            write(out, &msg)
        }
        Command::Resolve(a) => {
            let corpus_path = pick(&a.corpus, &config.paths.corpus, "corpus")?;
            let mut corpus = load_corpus(&corpus_path)?;
            let cache = match a.geocache.as_ref().or(config.paths.geocache.as_ref()) {
                Some(p) => GeocodeCache::load(p)?,
                None => GeocodeCache::default(),
            };
            let mode = if a.no_er { ErMode::Disabled } else { config.entity_resolution };
            let res = resolve_corpus(&mut corpus, &cache, mode);
            write_corpus(&corpus, &a.output)?;
            if let Some(p) = &a.entities {
                res.save(p)?;
            }
            write(
                out,
                &format!("{} people, {} places -> {}\n", res.people.len(), res.places.len(), a.output.display()),
            )
        }
        Command::Index(a) => {
            let corpus_path = pick(&a.corpus, &config.paths.corpus, "corpus")?;
            let output = pick(&a.output, &config.paths.index, "output")?;
            let corpus = load_corpus(&corpus_path)?;
            let bundle = IndexBundle::build(&corpus, &config.weights, config.scoring.bm25)?;
            bundle.save(&output, &corpus, &config.index_hash())?;
            write(out, &format!("indexed {} objects -> {}\n", corpus.len(), output.display()))
        }
        Command::Search(a) => {
            let scorer: Scorer = a.scorer.parse().map_err(|e: Error| Failure::Usage(e.to_string()))?;
            let text = fs::read_to_string(&a.query).map_err(|e| Error::io(&a.query, e))?;
            let query: Query = serde_json::from_str(&text)?;
            query.validate()?;
            let corpus = pick(&a.corpus, &config.paths.corpus, "corpus")?;
            let index = pick(&a.index, &config.paths.index, "index")?;
            let idx = load_searchable(&corpus, &index, &config)?;
            let results = idx.search(&query, scorer, a.top);
            write(out, &render_results(&results, cli.format)?)
        }
        Command::Eval(a) => {
            let corpus = pick(&a.corpus, &config.paths.corpus, "corpus")?;
            let index = pick(&a.index, &config.paths.index, "index")?;
            let groups = a.groups.clone().unwrap_or_else(|| config.eval.groups.clone());
            let specs = groups
                .iter()
                .map(|&g| QueryGroupSpec::group(g))
                .collect::<Result<Vec<_>>>()
                .map_err(|e| Failure::Usage(e.to_string()))?;
            let scorers: Vec<Scorer> = match &a.scorers {
                Some(names) => names
                    .iter()
                    .map(|n| n.parse())
                    .collect::<Result<_>>()
                    .map_err(|e| Failure::Usage(e.to_string()))?,
                None => config.eval.scorers.clone(),
            };
            let seed = a.seed.unwrap_or(config.eval.seed);
            let idx = load_searchable(&corpus, &index, &config)?;
            let methods: Vec<Method<'_>> = scorers.iter().map(|&s| Method::new(s.as_str(), s, &idx)).collect();
            let reports = run_eval(idx.objects(), &specs, &methods, seed)?;
            write_report(&reports, &a.out)?;
            let msg = match cli.format {
                Format::Json => {
                    let rows: Vec<_> = reports.iter().map(|r| (r.group_id, &r.summaries)).collect();
                    serde_json::to_string_pretty(&rows)? + "\n"
                }
                Format::Text => summary_markdown(&reports),
            };
            write(out, &msg)
        }
        Command::Synth(a) => {
            let spec = match &a.spec {
                Some(p) => SynthSpec::load(p)?,
                None => SynthSpec::default(),
            };
            let (corpus, truth) = generate_corpus(&spec)?;
            write_corpus(&corpus, &a.out)?;
            if let Some(p) = &a.truth {
                truth.save(p)?;
            }
            write(out, &format!("{} objects -> {}\n", corpus.len(), a.out.display()))
        }
    }
}

/// Parses `args` (program name first) and runs the command, returning the
/// exit status.
pub fn run<I, T>(args: I, out: &mut dyn std::io::Write, err: &mut dyn std::io::Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            if code == 0 {
                let _ = out.write_all(text.as_bytes());
            } else {
                let _ = err.write_all(text.as_bytes());
            }
            return code;
        }
    };
    match execute(cli, out) {
        Ok(()) => 0,
        Err(Failure::Usage(m)) => {
            let _ = writeln!(err, "error: {m}");
            2
        }
        Err(Failure::Data(e)) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}
