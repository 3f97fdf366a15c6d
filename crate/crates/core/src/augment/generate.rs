//! Conversations with a chat client, repair of invalid replies and the
//! single-layer gate.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde_json::Value;

use super::client::{ChatClient, ChatRequest};
use super::prompt::{EditRequest, PromptBuilder, PromptBundle, REPAIR_MARKER, SCENARIO_SENTINEL};
use super::AugmentError;
use crate::embedding::fnv1a;
use crate::scenario::{diff_layers, parse_scenario, LayerIndex, Scenario, Taxonomy};
use crate::{ContextMode, Provenance};

pub const DEFAULT_MAX_RETRIES: usize = 2;

/// Result of the single-layer gate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EditVerdict {
    /// Only the target layer changed, or nothing did (`noop`).
    Accepted { noop: bool },
    /// Non-target layers that changed.
    Violations(Vec<LayerIndex>),
}

/// Compares `candidate` with `original` layer by layer on whitespace
/// normalized text.
pub fn enforce_single_layer_edit(
    original: &Scenario,
    candidate: &Scenario,
    target: LayerIndex,
) -> Result<EditVerdict, AugmentError> {
    let changed: BTreeSet<LayerIndex> =
        diff_layers(original, candidate).map_err(|e| AugmentError::InvalidRequest(e.to_string()))?;
    let others: Vec<LayerIndex> = changed.iter().copied().filter(|&k| k != target).collect();
    Ok(if others.is_empty() {
        EditVerdict::Accepted {
            noop: changed.is_empty(),
        }
    } else {
        EditVerdict::Violations(others)
    })
}

fn strip_fences(text: &str) -> &str {
    let mut t = text.trim();
    if t.starts_with("```") {
        t = t.split_once('\n').map_or("", |(_, rest)| rest);
    }
    if let Some(rest) = t.trim_end().strip_suffix("```") {
        t = rest;
    }
    t.trim()
}

/// Splits a reply into scenario documents: either a JSON array or documents
/// separated by sentinel lines.
pub fn split_documents(reply: &str) -> Vec<String> {
    let body = strip_fences(reply);
    if body.starts_with('[') {
        if let Ok(Value::Array(items)) = serde_json::from_str::<Value>(body) {
            return items.iter().map(|v| v.to_string()).collect();
        }
    }
    let mut docs = Vec::new();
    let mut current = String::new();
    for line in body.lines() {
        if line.trim() == SCENARIO_SENTINEL {
            docs.push(core::mem::take(&mut current));
        } else {
            current.push_str(line);
            current.push('\n');
        }
    }
    docs.push(current);
    docs.into_iter()
        .map(|d| strip_fences(&d).to_string())
        .filter(|d| !d.is_empty())
        .collect()
}

/// Parses and validates every document of a reply.
pub fn parse_reply(
    reply: &str,
    bundle: &PromptBundle,
    taxonomy: &Taxonomy,
) -> Result<Vec<Scenario>, String> {
    let docs = split_documents(reply);
    if docs.len() != bundle.documents {
        return Err(format!(
            "expected {} scenario document(s), found {}",
            bundle.documents,
            docs.len()
        ));
    }
    docs.iter()
        .enumerate()
        .map(|(i, d)| {
            parse_scenario(d, bundle.structure_mode, taxonomy)
                .map_err(|e| format!("document {}: {e}", i + 1))
        })
        .collect()
}

/// Validated documents of one conversation.
#[derive(Debug, Clone, PartialEq)]
pub struct Repaired {
    pub documents: Vec<Scenario>,
    /// Re-prompts needed.
    pub retries: usize,
}

/// Parses `raw`; on failure re-prompts with the violations appended, at most
/// `max_retries` times.
pub fn repair_structured_output(
    raw: String,
    max_retries: usize,
    client: &dyn ChatClient,
    bundle: &PromptBundle,
    request: &ChatRequest,
    taxonomy: &Taxonomy,
) -> Result<Repaired, AugmentError> {
    let mut raw = raw;
    let mut messages: Vec<String> = Vec::new();
    loop {
        match parse_reply(&raw, bundle, taxonomy) {
            Ok(documents) => {
                return Ok(Repaired {
                    documents,
                    retries: messages.len(),
                })
            }
            Err(msg) => messages.push(msg),
        }
        if messages.len() > max_retries {
            return Err(AugmentError::ExhaustedRepairs {
                attempts: messages.len(),
                messages,
            });
        }
        let mut retry = request.clone();
        for m in &messages {
            retry.user.push_str(&format!(
                "\n{REPAIR_MARKER} {m}\nReply again with corrected scenario documents only.\n"
            ));
        }
        raw = client.complete(&retry)?;
    }
}

/// Knobs shared by every conversation of a run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenerationSettings {
    pub max_retries: usize,
    pub seed: u64,
    /// Provenance timestamp.
    pub created_at: String,
}

impl Default for GenerationSettings {
    fn default() -> Self {
        GenerationSettings {
            max_retries: DEFAULT_MAX_RETRIES,
            seed: 0,
            created_at: "1970-01-01T00:00:00Z".to_string(),
        }
    }
}

/// Conversations needed for a request.
pub fn conversation_count(req: &EditRequest) -> usize {
    match req.context_mode {
        ContextMode::Independent => req.n_variants,
        ContextMode::Shared => 1,
    }
}

/// Deterministic per-conversation seed.
pub fn conversation_seed(settings: &GenerationSettings, req: &EditRequest, conversation: usize) -> u64 {
    let key = format!(
        "{}:{}:{}:{}:{}",
        settings.seed, req.source.id, req.target_layer, req.context_mode, conversation
    );
    fnv1a(key.as_bytes())
}

/// Runs conversation `conversation` of `req`. Independent requests have one
/// conversation per variant and can be run in any order or concurrently.
pub fn run_conversation(
    client: &dyn ChatClient,
    builder: &PromptBuilder,
    bundle: &PromptBundle,
    req: &EditRequest,
    conversation: usize,
    settings: &GenerationSettings,
) -> Result<Repaired, AugmentError> {
    let enforce = client.supports_schema_enforcement();
    let request = ChatRequest {
        system: bundle.system.clone(),
        user: bundle.user_message(!enforce),
        temperature: req.temperature,
        response_schema: if enforce { bundle.schema.clone() } else { None },
        seed: conversation_seed(settings, req, conversation),
    };
    let raw = client.complete(&request)?;
    repair_structured_output(raw, settings.max_retries, client, bundle, &request, &builder.taxonomy)
}

/// A generated scenario that changed layers besides the target.
#[derive(Debug, Clone, PartialEq)]
pub struct Quarantined {
    pub scenario: Scenario,
    pub violations: Vec<LayerIndex>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GenerationOutcome {
    /// Scenarios that passed the gate, in variant order. Includes no-ops.
    pub accepted: Vec<Scenario>,
    pub quarantined: Vec<Quarantined>,
    pub retries: usize,
    /// Accepted scenarios identical to their source.
    pub noops: usize,
}

/// Id of variant `index` generated from `source_id`.
pub fn variant_id(source_id: &str, layer: LayerIndex, index: usize) -> String {
    format!("{source_id}-{layer}-v{index:02}")
}

/// Names, stamps and gates the documents of every conversation.
pub fn assemble(
    req: &EditRequest,
    model_id: &str,
    conversations: Vec<Repaired>,
    settings: &GenerationSettings,
) -> Result<GenerationOutcome, AugmentError> {
    let mut out = GenerationOutcome::default();
    let docs = conversations.into_iter().flat_map(|c| {
        out.retries += c.retries;
        c.documents
    });
    for (index, mut s) in docs.collect::<Vec<_>>().into_iter().enumerate() {
        s.id = variant_id(&req.source.id, req.target_layer, index);
        s.provenance = Some(Provenance {
            source_id: req.source.id.clone(),
            edited_layer: req.target_layer,
            strategy: req.structure_mode,
            context_mode: req.context_mode,
            model_id: model_id.to_string(),
            temperature: req.temperature,
            created_at: settings.created_at.clone(),
        });
        match enforce_single_layer_edit(&req.source, &s, req.target_layer)? {
            EditVerdict::Accepted { noop } => {
                out.noops += usize::from(noop);
                out.accepted.push(s);
            }
            EditVerdict::Violations(violations) => out.quarantined.push(Quarantined {
                scenario: s,
                violations,
            }),
        }
    }
    Ok(out)
}

/// Generates every variant of `req`, one conversation at a time.
pub fn generate_edits(
    client: &dyn ChatClient,
    builder: &PromptBuilder,
    req: &EditRequest,
    settings: &GenerationSettings,
) -> Result<GenerationOutcome, AugmentError> {
    let bundle = builder.build(req)?;
    let conversations = (0..conversation_count(req))
        .map(|c| run_conversation(client, builder, &bundle, req, c, settings))
        .collect::<Result<Vec<_>, _>>()?;
    assemble(req, client.model_id(), conversations, settings)
}
