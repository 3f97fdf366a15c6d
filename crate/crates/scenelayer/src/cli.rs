//! Command line.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use scenelayer_core::augment::{
    ChatClient, GenerationSettings, MockClient, PromptBuilder, TaskSet, DEFAULT_MAX_RETRIES,
};
use scenelayer_core::metrics::{EvaluateOptions, MetricReport};
use scenelayer_core::scenario::{detect_mode, parse_scenario};
use scenelayer_core::{ContextMode, LayerIndex, Scenario, StructureMode, Taxonomy};

use crate::corpus::{save_scenarios, CorpusError, Role, REFS_DIR};
use crate::error::{exit, Error, Result};
use crate::http::HttpChatClient;
use crate::pipeline::{emit, load_role, run_evaluate, run_generate, GenerateConfig, Provider, DEFAULT_JOBS};
use crate::render::{render, Format};

#[derive(Parser, Debug)]
#[command(name = "scenelayer", version, about = "Generate and score five-layer driving scenarios")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Validate scenario files and add them to a corpus as references.
    Ingest(IngestArgs),
    /// Edit reference scenarios layer by layer into edge cases.
    Generate(GenerateArgs),
    /// Score a generated corpus against a reference corpus.
    Evaluate(EvaluateArgs),
    /// Render a saved JSON report.
    Report(ReportArgs),
    /// Fill the embedding cache for one or two corpora.
    Embed(EmbedArgs),
}

#[derive(Args, Debug)]
pub struct TaxonomyArg {
    /// Category taxonomy JSON; the built-in one by default.
    #[arg(long)]
    pub taxonomy: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct IngestArgs {
    /// Scenario files or directories of `*.json` files.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Corpus root to add the references to.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub taxonomy: TaxonomyArg,
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    /// Reference corpus root or manifest.
    #[arg(long)]
    pub refs: PathBuf,
    /// Corpus root receiving `generated/<run-id>/`.
    #[arg(long)]
    pub out: PathBuf,
    /// Comma-separated layer indices.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
    pub layers: Vec<String>,
    #[arg(long, default_value_t = 10)]
    pub variants: usize,
    /// unstructured, soft or hard; defaults to each reference's mode.
    #[arg(long)]
    pub structure: Option<String>,
    /// independent or shared.
    #[arg(long, default_value = "independent")]
    pub context: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1.0)]
    pub temperature: f64,
    #[arg(long)]
    pub run_id: Option<String>,
    #[arg(long, default_value_t = DEFAULT_MAX_RETRIES)]
    pub max_retries: usize,
    /// Concurrent independent conversations.
    #[arg(long, default_value_t = DEFAULT_JOBS)]
    pub jobs: usize,
    /// Fail when any scenario is quarantined.
    #[arg(long)]
    pub strict: bool,
    /// Task file: JSON object from layer index to task text.
    #[arg(long)]
    pub tasks: Option<PathBuf>,
    /// Plain-text system prompt.
    #[arg(long)]
    pub system_prompt: Option<PathBuf>,
    #[command(flatten)]
    pub taxonomy: TaxonomyArg,
}

#[derive(Args, Debug)]
pub struct ProviderArgs {
    /// local, remote or replay:<provider-id>.
    #[arg(long, default_value = "local")]
    pub provider: String,
    #[arg(long)]
    pub embed_cache: Option<PathBuf>,
    /// Concurrent provider requests.
    #[arg(long, default_value_t = DEFAULT_JOBS)]
    pub jobs: usize,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    /// Generated corpus root or manifest.
    #[arg(long = "gen")]
    pub generated: PathBuf,
    #[arg(long)]
    pub refs: PathBuf,
    #[command(flatten)]
    pub provider: ProviderArgs,
    /// Leave out generated scenarios identical to their source.
    #[arg(long)]
    pub exclude_noops: bool,
    /// Also report D(mean) on embeddings.
    #[arg(long)]
    pub semantic_mean: bool,
    /// markdown, csv, series or json.
    #[arg(long, default_value = "markdown")]
    pub format: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub taxonomy: TaxonomyArg,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// JSON report written by `evaluate --format json`.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = "markdown")]
    pub format: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EmbedArgs {
    #[arg(long)]
    pub refs: PathBuf,
    #[arg(long = "gen")]
    pub generated: Option<PathBuf>,
    #[command(flatten)]
    pub provider: ProviderArgs,
    #[command(flatten)]
    pub taxonomy: TaxonomyArg,
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn taxonomy(arg: &TaxonomyArg) -> Result<Taxonomy> {
    match &arg.taxonomy {
        Some(p) => Ok(Taxonomy::from_json(&read_text(p)?)?),
        None => Ok(Taxonomy::default()),
    }
}

fn format_arg(s: &str) -> Result<Format> {
    Format::parse(s).ok_or_else(|| Error::Usage(format!("unknown format {s:?}")))
}

fn layers_arg(values: &[String]) -> Result<Vec<LayerIndex>> {
    let mut out = Vec::new();
    for v in values {
        let k = LayerIndex::parse(v.trim())
            .ok_or_else(|| Error::Usage(format!("layer {v:?} is not in 1..5")))?;
        if !out.contains(&k) {
            out.push(k);
        }
    }
    if out.is_empty() {
        return Err(Error::Usage("no layers selected".into()));
    }
    Ok(out)
}

/// Provenance timestamp: `SOURCE_DATE_EPOCH` when set, the Unix epoch for
/// the mock client, the current time otherwise.
fn created_at(mock: bool) -> String {
    let epoch = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|v| v.parse::<i64>().ok());
    let time = match (epoch, mock) {
        (Some(secs), _) => chrono::DateTime::from_timestamp(secs, 0),
        (None, true) => chrono::DateTime::from_timestamp(0, 0),
        (None, false) => Some(chrono::Utc::now()),
    };
    time.unwrap_or_default()
        .to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

fn collect_inputs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(p)
                .map_err(|e| Error::io(p, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "json"))
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(p.clone());
        }
    }
    Ok(files)
}

fn cmd_ingest(a: &IngestArgs) -> Result<()> {
    let tax = taxonomy(&a.taxonomy)?;
    let mut batch: Vec<Scenario> = Vec::new();
    for file in collect_inputs(&a.inputs)? {
        let text = read_text(&file)?;
        let schema = |source| CorpusError::Schema {
            file: file.clone(),
            source,
        };
        let mode = detect_mode(&text).map_err(schema)?;
        batch.push(parse_scenario(&text, mode, &tax).map_err(schema)?);
    }
    let manifest = save_scenarios(&a.out, REFS_DIR, Role::Reference, &batch)?;
    eprintln!(
        "ingested {} scenario(s); manifest has {} entries",
        batch.len(),
        manifest.entries.len()
    );
    Ok(())
}

fn cmd_generate(a: &GenerateArgs) -> Result<()> {
    let tax = taxonomy(&a.taxonomy)?;
    let structure = a
        .structure
        .as_deref()
        .map(|s| StructureMode::parse(s).ok_or_else(|| Error::Usage(format!("unknown structure mode {s:?}"))))
        .transpose()?;
    let context = ContextMode::parse(&a.context)
        .ok_or_else(|| Error::Usage(format!("unknown context mode {:?}", a.context)))?;
    let mut builder = PromptBuilder {
        taxonomy: tax.clone(),
        ..PromptBuilder::default()
    };
    if let Some(p) = &a.tasks {
        builder.tasks = TaskSet::from_json(&read_text(p)?)?;
    }
    if let Some(p) = &a.system_prompt {
        builder.system = read_text(p)?;
    }
    let http = HttpChatClient::from_env();
    let mock = MockClient {
        taxonomy: tax.clone(),
        ..MockClient::new(a.seed)
    };
    let client: &dyn ChatClient = match &http {
        Some(c) => c,
        None => &mock,
    };
    let refs = load_role(&a.refs, Role::Reference, &tax)?;
    let run_id = a.run_id.clone().unwrap_or_else(|| {
        format!(
            "{}-{}-s{}",
            structure.map_or("native", StructureMode::as_str),
            context.as_str(),
            a.seed
        )
    });
    let cfg = GenerateConfig {
        layers: layers_arg(&a.layers)?,
        variants: a.variants,
        structure,
        context,
        temperature: a.temperature,
        settings: GenerationSettings {
            max_retries: a.max_retries,
            seed: a.seed,
            created_at: created_at(http.is_none()),
        },
        run_id,
        strict: a.strict,
        jobs: a.jobs,
    };
    let summary = run_generate(&refs, client, &builder, &cfg, &a.out)?;
    println!("{}", summary.line());
    if summary.noops > 0 {
        eprintln!("warning: {} edit(s) left the scenario unchanged", summary.noops);
    }
    Ok(())
}

fn evaluate_report(
    generated: &Path,
    refs: &Path,
    provider: &ProviderArgs,
    tax: &Taxonomy,
    opts: &EvaluateOptions,
    exclude_noops: bool,
) -> Result<(MetricReport, usize)> {
    let gen = load_role(generated, Role::Generated, tax)?;
    let refs = load_role(refs, Role::Reference, tax)?;
    let p = Provider::open(&provider.provider, provider.embed_cache.as_deref(), provider.jobs)?;
    let report = run_evaluate(&gen.scenarios, &refs.scenarios, p.as_dyn(), tax, opts, exclude_noops)?;
    Ok((report, p.misses()))
}

fn cmd_evaluate(a: &EvaluateArgs) -> Result<()> {
    let format = format_arg(&a.format)?;
    let tax = taxonomy(&a.taxonomy)?;
    let opts = EvaluateOptions {
        semantic_mean: a.semantic_mean,
        ..EvaluateOptions::default()
    };
    let (report, _) = evaluate_report(&a.generated, &a.refs, &a.provider, &tax, &opts, a.exclude_noops)?;
    emit(a.out.as_ref(), &render(&report, format))
}

fn cmd_report(a: &ReportArgs) -> Result<()> {
    let format = format_arg(&a.format)?;
    let report: MetricReport = serde_json::from_str(&read_text(&a.input)?)
        .map_err(|e| Error::Usage(format!("{}: not a report: {e}", a.input.display())))?;
    emit(a.out.as_ref(), &render(&report, format))
}

fn cmd_embed(a: &EmbedArgs) -> Result<()> {
    if a.provider.embed_cache.is_none() {
        return Err(Error::Usage("embed needs --embed-cache".into()));
    }
    let tax = taxonomy(&a.taxonomy)?;
    let generated = a.generated.as_deref().unwrap_or(&a.refs);
    let opts = EvaluateOptions {
        semantic_mean: false,
        ..EvaluateOptions::default()
    };
    let (_, misses) = evaluate_report(generated, &a.refs, &a.provider, &tax, &opts, false)?;
    eprintln!("embedded {misses} new text(s)");
    Ok(())
}

pub fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Ingest(a) => cmd_ingest(a),
        Command::Generate(a) => cmd_generate(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Report(a) => cmd_report(a),
        Command::Embed(a) => cmd_embed(a),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { exit::USAGE } else { exit::OK };
        }
    };
    match execute(&cli) {
        Ok(()) => exit::OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
