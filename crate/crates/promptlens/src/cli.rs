//! Command-line front end.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | file system error |
//! | 2 | invalid configuration, arguments or input files |
//! | 3 | provider failure |
//! | 4 | finished with missing cells or excluded rows |
//! | 5 | call budget exceeded, nothing was sent |
//! | 130 | interrupted; a partial document was written when possible |

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use promptlens_core::stub::{StubEmbedder, StubProvider};
use promptlens_core::{
    plan_calls, plan_experiment, run_suffix_experiment, word_importance, CompletionProvider, Embedder,
    ExperimentError, FleschReadingEase, ImportanceError, PromptSpec, ProviderError, Provenance, Scorer,
    SuffixExperimentRecord, TopicSimilarity, WordCount,
};

use crate::cache::{CachedEmbedder, CachedProvider, ResponseCache, COMPLETIONS, EMBEDDINGS};
use crate::config::{ConfigError, ProviderKind, RunConfig};
use crate::corpus::{self, CorpusError};
use crate::http::{HttpEmbedder, HttpProvider, HttpSettings, RetryPolicy, API_KEY_ENV};
use crate::report::{
    heatmap_svg, records_csv, render_terminal, scatter_svg, write_text, ColorScale, ExperimentSummary, Payload,
    ReportDocument, ReportError, TableOptions,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Ok = 0,
    Io = 1,
    Usage = 2,
    Provider = 3,
    Partial = 4,
    Budget = 5,
    Interrupted = 130,
}

#[derive(Debug, Parser)]
#[command(name = "promptlens", version, about = "Word importance for LLM system prompts")]
pub struct Cli {
    /// TOML run configuration; without it the stub provider runs with seed 0.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Log progress (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Word importance for one system prompt.
    Analyze(AnalyzeArgs),
    /// Suffix experiment over a corpus.
    Experiment(ExperimentArgs),
    /// Inspect or clear the response cache.
    Cache {
        #[command(subcommand)]
        action: CacheAction,
    },
}

#[derive(Debug, Subcommand)]
pub enum CacheAction {
    /// Entry counts and sizes per namespace.
    Stats(CacheArgs),
    /// Remove every cached response.
    Clear(CacheArgs),
}

#[derive(Debug, Args)]
pub struct CacheArgs {
    /// Cache directory; defaults to provider.cache_dir from the config.
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
}

/// Flags that override config file values.
#[derive(Debug, Args, Default)]
pub struct Overrides {
    /// Samples per (prompt, input).
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long)]
    pub temperature: Option<f64>,
    /// Stub provider seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub model: Option<String>,
    /// Maximum provider calls.
    #[arg(long)]
    pub budget: Option<usize>,
    /// Run even when the plan exceeds the budget.
    #[arg(long)]
    pub allow_over_budget: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    #[arg(long)]
    pub parallelism: Option<usize>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// System prompt to analyze.
    #[arg(long, conflicts_with = "corpus")]
    pub prompt: Option<String>,
    /// User input; repeat for several.
    #[arg(long = "input")]
    pub inputs: Vec<String>,
    /// Suffix appended to the prompt after a space.
    #[arg(long)]
    pub suffix: Option<String>,
    /// Identifier used in output file names.
    #[arg(long, default_value = "prompt")]
    pub id: String,
    /// Take the prompt from a corpus file instead.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Corpus prompt to use: its id (e.g. r2) or 1-based position.
    #[arg(long, requires = "corpus")]
    pub row: Option<String>,
    /// The corpus file is a plain question list.
    #[arg(long)]
    pub questions: bool,
    /// Merge corpus rows sharing a system prompt.
    #[arg(long)]
    pub group: bool,
    /// Do not mask stopwords.
    #[arg(long)]
    pub exclude_stopwords: bool,
    /// Print the call plan and exit.
    #[arg(long)]
    pub dry_run: bool,
    /// Also write a word × score heatmap.
    #[arg(long)]
    pub heatmap: bool,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Prompt corpus (four-column CSV, or a question list with --questions).
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub questions: bool,
    /// Suffix list (suffix_id,text,score_id).
    #[arg(long)]
    pub suffixes: PathBuf,
    #[arg(long)]
    pub group: bool,
    #[arg(long)]
    pub exclude_stopwords: bool,
    #[arg(long)]
    pub dry_run: bool,
    #[command(flatten)]
    pub overrides: Overrides,
}

struct Failure {
    code: ExitCode,
    message: String,
}

impl Failure {
    fn new(code: ExitCode, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        let code = match e {
            ConfigError::Read { .. } => ExitCode::Io,
            _ => ExitCode::Usage,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<CorpusError> for Failure {
    fn from(e: CorpusError) -> Self {
        let code = match e {
            CorpusError::Read { .. } => ExitCode::Io,
            _ => ExitCode::Usage,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<ReportError> for Failure {
    fn from(e: ReportError) -> Self {
        let code = match e {
            ReportError::Io { .. } => ExitCode::Io,
            _ => ExitCode::Usage,
        };
        Failure::new(code, e.to_string())
    }
}

fn provider_failure(e: &ProviderError) -> ExitCode {
    match e {
        ProviderError::Cancelled => ExitCode::Interrupted,
        ProviderError::InvalidRequest(_) => ExitCode::Usage,
        _ => ExitCode::Provider,
    }
}

impl From<ImportanceError> for Failure {
    fn from(e: ImportanceError) -> Self {
        let code = match &e {
            ImportanceError::BudgetExceeded { .. } => ExitCode::Budget,
            ImportanceError::Baseline { source, .. } => provider_failure(source),
            _ => ExitCode::Usage,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Importance(inner) => inner.into(),
            other => Failure::new(ExitCode::Usage, other.to_string()),
        }
    }
}

fn effective_config(path: Option<&Path>, o: &Overrides) -> Result<RunConfig, Failure> {
    let mut c = match path {
        Some(p) => RunConfig::load_unchecked(p)?,
        None => RunConfig::stub_default(),
    };
    if let Some(n) = o.n {
        c.sampling.n = n;
    }
    if let Some(t) = o.temperature {
        c.sampling.temperature = t;
    }
    if let Some(seed) = o.seed {
        c.stub.seed = Some(seed);
    }
    if let Some(model) = &o.model {
        c.provider.model_id = Some(model.clone());
    }
    if let Some(b) = o.budget {
        c.budget.max_calls = Some(b);
    }
    if o.allow_over_budget {
        c.budget.allow_over_budget = true;
    }
    if let Some(out) = &o.out {
        c.output.dir = out.clone();
    }
    if let Some(dir) = &o.cache_dir {
        c.provider.cache_dir = Some(dir.clone());
    }
    if let Some(p) = o.parallelism {
        c.provider.parallelism = p;
    }
    c.validate()?;
    Ok(c)
}

type DynProvider = Arc<dyn CompletionProvider + Send + Sync>;
type DynEmbedder = Arc<dyn Embedder + Send + Sync>;

/// Providers and scorers assembled from a configuration.
struct Runtime {
    provider: CachedProvider<DynProvider>,
    scorers: Vec<Box<dyn Scorer>>,
}

fn http_settings(config: &RunConfig) -> Result<HttpSettings, Failure> {
    let key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.trim().is_empty()).ok_or_else(|| {
        Failure::new(ExitCode::Usage, format!("the http provider needs an API key in the {API_KEY_ENV} environment variable"))
    })?;
    let p = &config.provider;
    let mut s = HttpSettings::new(
        p.base_url.as_deref().unwrap_or_default(),
        p.model_id.as_deref().unwrap_or_default(),
        &key,
    );
    s.embedding_model = p.embedding_model.clone().unwrap_or_default();
    s.timeout = Duration::from_secs(p.timeout_secs);
    s.single_call_n = p.single_call_n;
    s.retry = RetryPolicy {
        attempts: p.retry_attempts,
        initial_backoff: Duration::from_millis(p.retry_initial_ms),
        ..RetryPolicy::default()
    };
    Ok(s)
}

/// Fails fast on missing credentials, before any network traffic.
fn preflight(config: &RunConfig) -> Result<(), Failure> {
    if config.provider.kind == ProviderKind::Http {
        http_settings(config)?;
    }
    Ok(())
}

fn open_cache(config: &RunConfig) -> Result<Option<ResponseCache>, Failure> {
    config
        .provider
        .cache_dir
        .as_ref()
        .map(|dir| ResponseCache::open(dir).map_err(|e| Failure::new(ExitCode::Io, e.to_string())))
        .transpose()
}

fn build_runtime(config: &RunConfig, cancel: Arc<AtomicBool>) -> Result<Runtime, Failure> {
    let cache = open_cache(config)?;
    let (inner, embedder, embed_model): (DynProvider, DynEmbedder, String) = match config.provider.kind {
        ProviderKind::Stub => (
            Arc::new(StubProvider::new(config.stub_config())),
            Arc::new(StubEmbedder::default()),
            "stub-bag-of-words".into(),
        ),
        ProviderKind::Http => {
            let settings = http_settings(config)?;
            let model = settings.embedding_model.clone();
            (
                Arc::new(HttpProvider::new(settings.clone())),
                Arc::new(HttpEmbedder::new(settings)),
                model,
            )
        }
    };
    let kind = inner.kind().to_string();
    let provider = CachedProvider::new(inner, cache.clone(), config.provider.parallelism).with_cancel_flag(cancel);
    let embedder = Arc::new(CachedEmbedder::new(embedder, &kind, &embed_model, cache));
    let mut scorers: Vec<Box<dyn Scorer>> = Vec::new();
    for id in &config.scoring.scores {
        match id.as_str() {
            "word_count" => scorers.push(Box::new(WordCount)),
            "flesch_reading_ease" => scorers.push(Box::new(FleschReadingEase)),
            _ => {
                for topic in &config.scoring.topics {
                    let scorer = TopicSimilarity::new(topic, embedder.clone())
                        .map_err(|e| Failure::new(ExitCode::Provider, format!("topic `{topic}`: {e}")))?;
                    scorers.push(Box::new(scorer));
                }
            }
        }
    }
    Ok(Runtime { provider, scorers })
}

fn provenance(config: &RunConfig, kind: &str, m: usize) -> Provenance {
    Provenance {
        model_id: config.model_id(),
        provider_kind: kind.to_string(),
        temperature: config.sampling.temperature,
        n: config.sampling.n,
        m,
        seed: match config.provider.kind {
            ProviderKind::Stub => config.stub.seed,
            ProviderKind::Http => None,
        },
        config_digest: Some(config.digest()),
        tool_version: Some(env!("CARGO_PKG_VERSION").to_string()),
        timestamp: SystemTime::now().duration_since(UNIX_EPOCH).ok().map(|d| d.as_secs()),
    }
}

fn check_budget(planned: usize, config: &RunConfig) -> Result<(), Failure> {
    match config.budget.max_calls {
        Some(budget) if planned > budget && !config.budget.allow_over_budget => Err(Failure::new(
            ExitCode::Budget,
            format!(
                "refusing to run: the plan needs {planned} provider calls, over the budget of {budget} \
                 (raise budget.max_calls or pass --allow-over-budget)"
            ),
        )),
        _ => Ok(()),
    }
}

fn print_cost(out: &mut impl std::io::Write, planned: usize, config: &RunConfig) {
    let _ = writeln!(out, "provider calls planned: {planned}");
    if config.budget.cost_per_call > 0.0 {
        let _ = writeln!(out, "estimated cost: {:.4}", planned as f64 * config.budget.cost_per_call);
    }
    if let Some(b) = config.budget.max_calls {
        let _ = writeln!(out, "budget: {b} calls");
    }
}

fn file_stem(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_alphanumeric() || c == '-' || c == '_' { c } else { '-' })
        .collect()
}

fn resolve_prompt(args: &AnalyzeArgs) -> Result<PromptSpec, Failure> {
    let spec = if let Some(path) = &args.corpus {
        let prompts = if args.questions {
            corpus::load_questions(path)?
        } else {
            let c = corpus::load_corpus(path)?;
            for issue in &c.issues {
                eprintln!("warning: {}: line {}: {}", path.display(), issue.line, issue.message);
            }
            c.prompts(args.group)
        };
        let row = args.row.as_deref().unwrap_or("1");
        let found = prompts.iter().find(|p| p.prompt_id == row).cloned().or_else(|| {
            row.parse::<usize>()
                .ok()
                .and_then(|i| i.checked_sub(1))
                .and_then(|i| prompts.get(i).cloned())
        });
        let mut spec = found.ok_or_else(|| Failure::new(ExitCode::Usage, format!("no corpus prompt `{row}`")))?;
        spec.user_inputs.extend(args.inputs.iter().cloned());
        spec
    } else {
        let prompt = args
            .prompt
            .as_deref()
            .ok_or_else(|| Failure::new(ExitCode::Usage, "give --prompt or --corpus"))?;
        if args.inputs.is_empty() {
            return Err(Failure::new(ExitCode::Usage, "give at least one --input"));
        }
        let inputs: Vec<&str> = args.inputs.iter().map(String::as_str).collect();
        PromptSpec::new(&args.id, prompt, &inputs)
    };
    let spec = match &args.suffix {
        Some(s) => spec.with_suffix(s),
        None => spec,
    };
    spec.validate().map_err(|e| Failure::new(ExitCode::Usage, e.to_string()))?;
    Ok(spec)
}

fn analyze(cli_config: Option<&Path>, args: &AnalyzeArgs, cancel: Arc<AtomicBool>) -> Result<ExitCode, Failure> {
    let config = effective_config(cli_config, &args.overrides)?;
    let spec = resolve_prompt(args)?;
    let mut options = config.analysis_options()?;
    options.exclude_stopwords |= args.exclude_stopwords;
    let plan = plan_calls(&spec, &options)?;
    let mut out = std::io::stdout().lock();

    if args.dry_run {
        let _ = writeln!(out, "prompt: {}", spec.full_prompt());
        let _ = writeln!(
            out,
            "plan: {} input(s) × {} sample(s) × (1 baseline + {} variant(s))",
            plan.inputs, plan.n, plan.variants
        );
        print_cost(&mut out, plan.calls, &config);
        return Ok(ExitCode::Ok);
    }
    preflight(&config)?;
    check_budget(plan.calls, &config)?;

    let runtime = build_runtime(&config, cancel.clone())?;
    let result = word_importance(&spec, &runtime.provider, &runtime.scorers, &options);
    let interrupted = cancel.load(Ordering::SeqCst);
    let mut matrix = match result {
        Ok(m) => m,
        Err(e) => {
            let f = Failure::from(e);
            if f.code == ExitCode::Interrupted {
                return Err(Failure::new(ExitCode::Interrupted, "interrupted before the baseline completed; nothing to report"));
            }
            return Err(f);
        }
    };
    matrix.provenance = provenance(&config, runtime.provider.kind(), spec.user_inputs.len());
    let partial = matrix.partial || interrupted;

    let table = render_terminal(&matrix, &TableOptions {
        precision: config.output.precision,
        width: config.output.width,
    });
    let _ = write!(out, "{table}");
    let stem = file_stem(&spec.prompt_id);
    let dir = &config.output.dir;
    let doc_path = dir.join(format!("{stem}.importance.json"));
    let doc = ReportDocument::new(matrix.provenance.clone(), partial, Payload::ImportanceMatrix(Box::new(matrix.clone())))?;
    doc.export(&doc_path)?;
    let _ = writeln!(out, "wrote {}", doc_path.display());
    if args.heatmap {
        let labels_y: Vec<String> = matrix.units.iter().map(|u| u.label.clone()).collect();
        let svg = heatmap_svg(&matrix.score_ids, &labels_y, &matrix.values, ColorScale::PerColumn, config.output.precision)?;
        let path = dir.join(format!("{stem}.heatmap.svg"));
        write_text(&path, &svg)?;
        let _ = writeln!(out, "wrote {}", path.display());
    }
    let _ = writeln!(
        out,
        "provider calls: {} (cache hits: {}, planned: {})",
        runtime.provider.upstream_samples(),
        runtime.provider.cache_hits(),
        plan.calls
    );
    Ok(if interrupted {
        ExitCode::Interrupted
    } else if partial {
        ExitCode::Partial
    } else {
        ExitCode::Ok
    })
}

fn experiment(cli_config: Option<&Path>, args: &ExperimentArgs, cancel: Arc<AtomicBool>) -> Result<ExitCode, Failure> {
    let config = effective_config(cli_config, &args.overrides)?;
    let mut row_exclusions = Vec::new();
    let prompts = if args.questions {
        corpus::load_questions(&args.corpus)?
    } else {
        let c = corpus::load_corpus(&args.corpus)?;
        for issue in &c.issues {
            eprintln!("warning: {}: line {}: {} (row excluded)", args.corpus.display(), issue.line, issue.message);
            row_exclusions.push(promptlens_core::Exclusion {
                prompt_id: format!("line {}", issue.line),
                suffix_id: None,
                score_id: None,
                reason: issue.message.clone(),
            });
        }
        c.prompts(args.group)
    };
    let suffixes = corpus::load_suffixes(&args.suffixes)?;
    let mut options = config.analysis_options()?;
    options.exclude_stopwords |= args.exclude_stopwords;
    let planned = plan_experiment(&prompts, &suffixes, &options);
    let mut out = std::io::stdout().lock();

    if args.dry_run {
        let _ = writeln!(out, "prompts: {}, suffixes: {}", prompts.len(), suffixes.len());
        print_cost(&mut out, planned, &config);
        return Ok(ExitCode::Ok);
    }
    preflight(&config)?;
    check_budget(planned, &config)?;

    let runtime = build_runtime(&config, cancel.clone())?;
    let outcome = run_suffix_experiment(&prompts, &suffixes, &runtime.provider, &runtime.scorers, &options)?;
    let interrupted = outcome.partial || cancel.load(Ordering::SeqCst);
    let m = prompts.iter().map(|p| p.user_inputs.len()).max().unwrap_or(0);
    let prov = provenance(&config, runtime.provider.kind(), m);

    let dir = &config.output.dir;
    write_text(&dir.join("records.csv"), &records_csv(&outcome.records)?)?;
    ReportDocument::new(prov.clone(), interrupted, Payload::ExperimentRecords(outcome.records.clone()))?
        .export(&dir.join("records.json"))?;
    let mut exclusions = row_exclusions;
    exclusions.extend(outcome.exclusions.iter().cloned());
    let summary = ExperimentSummary {
        summaries: outcome.summaries.clone(),
        exclusions: exclusions.clone(),
        planned_calls: outcome.planned_calls,
        provider_calls: runtime.provider.upstream_samples(),
    };
    ReportDocument::new(prov, interrupted, Payload::ExperimentSummary(summary))?.export(&dir.join("summary.json"))?;

    let mut plots = 0;
    for s in &outcome.summaries {
        let points: Vec<SuffixExperimentRecord> = outcome
            .records
            .iter()
            .filter(|r| r.suffix_id == s.suffix_id && r.score_id == s.score_id)
            .cloned()
            .collect();
        if points.len() < 2 {
            continue;
        }
        let path = dir.join("plots").join(format!("{}__{}.svg", file_stem(&s.suffix_id), file_stem(&s.score_id)));
        write_text(&path, &scatter_svg(&points, s)?)?;
        plots += 1;
    }

    let _ = writeln!(out, "{:<16} {:<28} {:>6} {:>8}", "suffix", "score", "points", "r");
    for s in &outcome.summaries {
        let r = s.r.map_or_else(|| "n/a".to_string(), |r| format!("{r:.3}"));
        let mark = if s.designed { " (designed)" } else { "" };
        let _ = writeln!(out, "{:<16} {:<28} {:>6} {:>8}{mark}", s.suffix_id, s.score_id, s.n_points, r);
    }
    for e in &exclusions {
        let _ = writeln!(
            out,
            "excluded {} {} {}: {}",
            e.prompt_id,
            e.suffix_id.as_deref().unwrap_or("-"),
            e.score_id.as_deref().unwrap_or("-"),
            e.reason
        );
    }
    let _ = writeln!(
        out,
        "records: {}, summaries: {}, plots: {plots}, wrote {}",
        outcome.records.len(),
        outcome.summaries.len(),
        dir.display()
    );
    let _ = writeln!(
        out,
        "provider calls: {} (cache hits: {}, planned: {})",
        runtime.provider.upstream_samples(),
        runtime.provider.cache_hits(),
        planned
    );
    Ok(if interrupted {
        ExitCode::Interrupted
    } else if !exclusions.is_empty() {
        ExitCode::Partial
    } else {
        ExitCode::Ok
    })
}

fn cache(cli_config: Option<&Path>, action: &CacheAction) -> Result<ExitCode, Failure> {
    let (CacheAction::Stats(args) | CacheAction::Clear(args)) = action;
    let overrides = Overrides {
        cache_dir: args.cache_dir.clone(),
        ..Overrides::default()
    };
    let config = effective_config(cli_config, &overrides)?;
    let dir = config
        .provider
        .cache_dir
        .as_ref()
        .ok_or_else(|| Failure::new(ExitCode::Usage, "no cache directory configured (provider.cache_dir or --cache-dir)"))?;
    let io = |e: crate::cache::CacheError| Failure::new(ExitCode::Io, e.to_string());
    let mut out = std::io::stdout().lock();
    match action {
        CacheAction::Stats(_) => {
            let cache = if dir.exists() { Some(ResponseCache::open(dir).map_err(io)?) } else { None };
            for ns in [COMPLETIONS, EMBEDDINGS] {
                let stats = match &cache {
                    Some(c) => c.stats(ns).map_err(io)?,
                    None => Default::default(),
                };
                let _ = writeln!(out, "{ns}: {} entries, {} bytes", stats.entries, stats.bytes);
            }
        }
        CacheAction::Clear(_) => {
            if dir.exists() {
                ResponseCache::open(dir).map_err(io)?.clear().map_err(io)?;
            }
            let _ = writeln!(out, "cleared {}", dir.display());
        }
    }
    Ok(ExitCode::Ok)
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: &Cli, cancel: Arc<AtomicBool>) -> i32 {
    let config = cli.config.as_deref();
    let result = match &cli.command {
        Command::Analyze(args) => analyze(config, args, cancel),
        Command::Experiment(args) => experiment(config, args, cancel),
        Command::Cache { action } => cache(config, action),
    };
    match result {
        Ok(code) => code as i32,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code as i32
        }
    }
}

/// Entry point of the `promptlens` binary.
pub fn main() -> i32 {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let cancel = Arc::new(AtomicBool::new(false));
    let flag = cancel.clone();
    if let Err(e) = ctrlc::set_handler(move || {
        if flag.swap(true, Ordering::SeqCst) {
            std::process::exit(ExitCode::Interrupted as i32);
        }
        eprintln!("interrupt: finishing in-flight requests, press again to abort");
    }) {
        log::warn!("could not install interrupt handler: {e}");
    }
    run(&cli, cancel)
}
