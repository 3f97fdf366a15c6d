//! Generation and evaluation runs over on-disk corpora.

use std::io::{self, Write};
use std::path::{Path, PathBuf};

use scenelayer_core::augment::{
    assemble, conversation_count, run_conversation, ChatClient, EditRequest, GenerationSettings,
    PromptBuilder, Quarantined,
};
use scenelayer_core::embedding::{Embedding, EmbeddingError, EmbeddingProvider, LocalProvider};
use scenelayer_core::metrics::{evaluate, EvaluateOptions, MetricReport};
use scenelayer_core::scenario::diff_layers;
use scenelayer_core::{ContextMode, LayerIndex, Scenario, StructureMode, Taxonomy};

use crate::cache::{CachedProvider, EmbeddingCache, ReplayProvider};
use crate::corpus::{load_corpus, save_generated, Corpus, Manifest, Role};
use crate::error::{Error, Result};
use crate::http::RemoteEmbeddingProvider;
use crate::util::bounded_map;

pub const DEFAULT_JOBS: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct GenerateConfig {
    pub layers: Vec<LayerIndex>,
    pub variants: usize,
    /// `None` keeps each reference's own mode.
    pub structure: Option<StructureMode>,
    pub context: ContextMode,
    pub temperature: f64,
    pub settings: GenerationSettings,
    pub run_id: String,
    pub strict: bool,
    pub jobs: usize,
}

impl Default for GenerateConfig {
    fn default() -> Self {
        GenerateConfig {
            layers: LayerIndex::ALL.to_vec(),
            variants: 10,
            structure: None,
            context: ContextMode::Independent,
            temperature: 1.0,
            settings: GenerationSettings::default(),
            run_id: "run".into(),
            strict: false,
            jobs: DEFAULT_JOBS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GenerateSummary {
    pub run_id: String,
    pub generated: usize,
    pub quarantined: usize,
    pub retried: usize,
    pub noops: usize,
    pub manifest_entries: usize,
}

impl GenerateSummary {
    pub fn line(&self) -> String {
        format!(
            "run {}: generated {}, quarantined {}, retried {}, no-op {}",
            self.run_id, self.generated, self.quarantined, self.retried, self.noops
        )
    }
}

/// Converts `source` to `mode`. Hard scenarios flatten to either text mode;
/// text cannot become hard.
pub fn to_mode(source: &Scenario, mode: StructureMode) -> Result<Scenario> {
    if source.mode() == mode {
        Ok(source.clone())
    } else if !source.mode().is_textual() && mode.is_textual() {
        Ok(source.flattened(mode))
    } else {
        Err(Error::Usage(format!(
            "scenario {:?} is {} and cannot be edited in {mode} mode",
            source.id,
            source.mode()
        )))
    }
}

/// Everything a run keeps in memory before it is persisted.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GeneratedBatch {
    pub accepted: Vec<Scenario>,
    pub quarantined: Vec<Quarantined>,
    pub retried: usize,
    pub noops: usize,
}

/// Runs every (source, layer) request. Independent conversations of one
/// request run on up to `cfg.jobs` threads.
pub fn generate_batch(
    refs: &[Scenario],
    client: &dyn ChatClient,
    builder: &PromptBuilder,
    cfg: &GenerateConfig,
) -> Result<GeneratedBatch> {
    if cfg.variants == 0 {
        return Err(Error::Usage("--variants must be at least 1".into()));
    }
    let mut batch = GeneratedBatch::default();
    for source in refs {
        let source = match cfg.structure {
            Some(mode) => to_mode(source, mode)?,
            None => source.clone(),
        };
        for &k in &cfg.layers {
            let mut req = EditRequest::new(source.clone(), k, cfg.context, cfg.variants);
            req.temperature = cfg.temperature;
            let bundle = builder.build(&req)?;
            let conversations = bounded_map(conversation_count(&req), cfg.jobs, |c| {
                run_conversation(client, builder, &bundle, &req, c, &cfg.settings)
            })
            .into_iter()
            .collect::<Result<Vec<_>, _>>()?;
            let out = assemble(&req, client.model_id(), conversations, &cfg.settings)?;
            batch.retried += out.retries;
            batch.noops += out.noops;
            batch.accepted.extend(out.accepted);
            batch.quarantined.extend(out.quarantined);
        }
    }
    Ok(batch)
}

/// Generates, then persists the whole run at once, so a failed run writes
/// nothing. In strict mode quarantined scenarios fail the run after they
/// are recorded.
pub fn run_generate(
    refs: &Corpus,
    client: &dyn ChatClient,
    builder: &PromptBuilder,
    cfg: &GenerateConfig,
    out_root: &Path,
) -> Result<GenerateSummary> {
    let batch = generate_batch(&refs.scenarios, client, builder, cfg)?;
    let manifest = save_generated(out_root, &cfg.run_id, &batch.accepted, &batch.quarantined)?;
    let summary = GenerateSummary {
        run_id: cfg.run_id.clone(),
        generated: batch.accepted.len(),
        quarantined: batch.quarantined.len(),
        retried: batch.retried,
        noops: batch.noops,
        manifest_entries: manifest.entries.len(),
    };
    if cfg.strict && summary.quarantined > 0 {
        return Err(Error::StrictQuarantine(summary.quarantined));
    }
    Ok(summary)
}

/// Loads the `preferred` role of a manifest, or the whole manifest when no
/// entry has that role.
pub fn load_role(path: &Path, preferred: Role, taxonomy: &Taxonomy) -> Result<Corpus> {
    let manifest = Manifest::read(&crate::corpus::manifest_path(path))?;
    let role = manifest
        .entries
        .iter()
        .any(|e| e.role == preferred)
        .then_some(preferred);
    Ok(load_corpus(path, role, taxonomy)?)
}

/// Brings both corpora to one mode: hard scenarios are flattened when any
/// scenario is in a text mode.
pub fn harmonize(gen: &[Scenario], refs: &[Scenario]) -> (Vec<Scenario>, Vec<Scenario>) {
    let text_mode = gen
        .iter()
        .chain(refs)
        .map(Scenario::mode)
        .find(|m| m.is_textual());
    let conv = |s: &Scenario| match text_mode {
        Some(m) if !s.mode().is_textual() => s.flattened(m),
        _ => s.clone(),
    };
    (gen.iter().map(conv).collect(), refs.iter().map(conv).collect())
}

/// Generated scenarios identical to their source reference.
pub fn is_noop(s: &Scenario, refs: &[Scenario]) -> bool {
    let Some(p) = &s.provenance else {
        return false;
    };
    refs.iter()
        .find(|r| r.id == p.source_id)
        .and_then(|r| diff_layers(r, s).ok())
        .is_some_and(|d| d.is_empty())
}

pub fn run_evaluate(
    gen: &[Scenario],
    refs: &[Scenario],
    provider: &dyn EmbeddingProvider,
    taxonomy: &Taxonomy,
    opts: &EvaluateOptions,
    exclude_noops: bool,
) -> Result<MetricReport> {
    let (mut gen, refs) = harmonize(gen, refs);
    if exclude_noops {
        gen.retain(|s| !is_noop(s, &refs));
    }
    Ok(evaluate(&gen, &refs, provider, taxonomy, opts)?)
}

/// Local, remote or replay provider, from a `--provider` value.
pub enum Backend {
    Local(LocalProvider),
    Remote(RemoteEmbeddingProvider),
}

impl EmbeddingProvider for Backend {
    fn id(&self) -> &str {
        match self {
            Backend::Local(p) => p.id(),
            Backend::Remote(p) => p.id(),
        }
    }

    fn dim(&self) -> usize {
        match self {
            Backend::Local(p) => p.dim(),
            Backend::Remote(p) => p.dim(),
        }
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Embedding>, EmbeddingError> {
        match self {
            Backend::Local(p) => p.embed_batch(texts),
            Backend::Remote(p) => p.embed_batch(texts),
        }
    }
}

pub enum Provider {
    Cached(Box<CachedProvider<Backend>>),
    Replay(ReplayProvider),
}

impl Provider {
    /// `local`, `remote` or `replay:<provider-id>`. Replay needs a cache file.
    pub fn open(choice: &str, cache: Option<&Path>, concurrency: usize) -> Result<Provider> {
        let cache_file = |path: Option<&Path>| -> Result<EmbeddingCache> {
            Ok(match path {
                Some(p) => EmbeddingCache::open(p)?,
                None => EmbeddingCache::in_memory(),
            })
        };
        if let Some(id) = choice.strip_prefix("replay:") {
            let path = cache.ok_or_else(|| Error::Usage("replay needs --embed-cache".into()))?;
            if !path.exists() {
                return Err(Error::Embedding(EmbeddingError::ProviderUnavailable(format!(
                    "replay cache {} does not exist",
                    path.display()
                ))));
            }
            return Ok(Provider::Replay(ReplayProvider::new(id, cache_file(Some(path))?)?));
        }
        let backend = match choice {
            "local" => Backend::Local(LocalProvider),
            "remote" => Backend::Remote(RemoteEmbeddingProvider::from_env().ok_or_else(|| {
                EmbeddingError::ProviderUnavailable(format!(
                    "{} is not set",
                    crate::http::EMBED_ENDPOINT
                ))
            })?),
            other => return Err(Error::Usage(format!("unknown provider {other:?}"))),
        };
        let mut cached = CachedProvider::new(backend, cache_file(cache)?);
        cached.concurrency = concurrency;
        Ok(Provider::Cached(Box::new(cached)))
    }

    pub fn as_dyn(&self) -> &dyn EmbeddingProvider {
        match self {
            Provider::Cached(p) => &**p,
            Provider::Replay(p) => p,
        }
    }

    pub fn misses(&self) -> usize {
        match self {
            Provider::Cached(p) => p.misses(),
            Provider::Replay(_) => 0,
        }
    }
}

/// Writes to `path`, or stdout when `None`.
pub fn emit(path: Option<&PathBuf>, text: &str) -> Result<()> {
    match path {
        Some(p) => crate::corpus::write_atomic(p, text.as_bytes())?,
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Error::io("<stdout>", e))?,
    }
    Ok(())
}
