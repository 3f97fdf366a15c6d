//! Full per-layer evaluation of a generated corpus against a reference corpus.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::component::{layer_component_metrics, ComponentField};
use super::{
    component_text_diversity, dataset_diversity, dataset_originality, mean_component_count,
    Aggregation, Extremum, MetricError, Score,
};
use crate::embedding::{embed_corpus, embed_texts, EmbeddingProvider, EmbeddingSet, FieldSelector};
use crate::scenario::{concat_layers, LayerIndex, Scenario, Taxonomy};

/// Layer label for scores on the concatenated scene text.
pub const TOTAL_TEXT: &str = "total-text";
/// Layer label for the mean of the five per-layer scores.
pub const TOTAL_MEAN: &str = "total-mean";

pub fn layer_label(k: LayerIndex) -> String {
    k.key()
}

/// One score of a report.
///
/// `m` is the size of the scored set and `n` the size of the reference set
/// it was compared with (0 for within-set metrics).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricEntry {
    pub layer: String,
    pub metric: String,
    pub mode: String,
    pub score: Option<f64>,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub na_pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricReport {
    pub provider_id: String,
    pub generated: usize,
    pub reference: usize,
    pub entries: Vec<MetricEntry>,
}

impl MetricReport {
    pub fn get(&self, layer: &str, metric: &str, mode: &str) -> Option<&MetricEntry> {
        self.entries
            .iter()
            .find(|e| e.layer == layer && e.metric == metric && e.mode == mode)
    }

    pub fn push(&mut self, layer: &str, metric: &str, mode: &str, score: Score, m: usize, n: usize) {
        self.entries.push(MetricEntry {
            layer: layer.to_string(),
            metric: metric.to_string(),
            mode: mode.to_string(),
            score: score.value,
            m,
            n,
            na_pairs: score.na_pairs,
        });
    }
}

/// Which parts of the report to compute.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluateOptions {
    /// Embedding-level O(max), O(min), D(min), D(max) per layer and totals.
    pub semantic: bool,
    /// Also report D(mean) on embeddings.
    pub semantic_mean: bool,
    /// CO / CD on category-count vectors (hard mode only).
    pub component: bool,
    /// Component text fields whose min-mode diversity is reported (hard mode only).
    pub characteristics: Vec<(LayerIndex, String, ComponentField)>,
    /// Mean component counts per group (hard mode only).
    pub counts: bool,
}

impl Default for EvaluateOptions {
    fn default() -> Self {
        let mut characteristics = Vec::new();
        for k in LayerIndex::ALL {
            for &g in k.groups() {
                characteristics.push((k, g.to_string(), ComponentField::Characteristics));
                if k.allows_motion() {
                    characteristics.push((k, g.to_string(), ComponentField::Motion));
                }
            }
        }
        EvaluateOptions {
            semantic: true,
            semantic_mean: false,
            component: true,
            characteristics,
            counts: true,
        }
    }
}

fn or_na(r: Result<Score, MetricError>) -> Result<Score, MetricError> {
    match r {
        Ok(s) => Ok(s),
        Err(
            MetricError::EmptyGenerated | MetricError::EmptyReference | MetricError::TooFewSamples(_),
        ) => Ok(Score::NA),
        Err(e) => Err(e),
    }
}

/// Semantic-level scores of one pair of embedding sets under one layer label.
fn push_semantic(
    report: &mut MetricReport,
    label: &str,
    gen: &EmbeddingSet,
    refs: &EmbeddingSet,
    with_mean: bool,
) -> Result<(), MetricError> {
    let (m, n) = (gen.len(), refs.len());
    for (mode, ext) in [("max", Extremum::Max), ("min", Extremum::Min)] {
        let s = or_na(dataset_originality(gen, refs, ext))?;
        report.push(label, "O", mode, s, m, n);
    }
    let mut modes = Vec::from([Aggregation::Min, Aggregation::Max]);
    if with_mean {
        modes.push(Aggregation::Mean);
    }
    for agg in &modes {
        let s = or_na(dataset_diversity(gen, *agg))?;
        report.push(label, "D", agg.as_str(), s, m, 0);
    }
    for agg in &modes {
        let s = or_na(dataset_diversity(refs, *agg))?;
        report.push(label, "D_ref", agg.as_str(), s, n, 0);
    }
    Ok(())
}

/// Appends `total-mean` entries averaging each L1..L5 row's defined scores.
fn push_total_mean(report: &mut MetricReport, metrics: &[&str]) {
    let mut rows: Vec<(String, String)> = Vec::new();
    for e in &report.entries {
        if metrics.contains(&e.metric.as_str()) {
            let key = (e.metric.clone(), e.mode.clone());
            if !rows.contains(&key) {
                rows.push(key);
            }
        }
    }
    for (metric, mode) in rows {
        let per_layer: Vec<&MetricEntry> = LayerIndex::ALL
            .iter()
            .filter_map(|&k| report.get(&layer_label(k), &metric, &mode))
            .collect();
        let Some(first) = per_layer.first() else {
            continue;
        };
        let (m, n) = (first.m, first.n);
        let na_pairs = per_layer.iter().map(|e| e.na_pairs).sum();
        let agg = super::reduce(per_layer.iter().map(|e| e.score), Aggregation::Mean);
        report.push(
            TOTAL_MEAN,
            &metric,
            &mode,
            Score {
                value: agg.value,
                na_pairs,
            },
            m,
            n,
        );
    }
}

fn concat_set(
    provider: &dyn EmbeddingProvider,
    scenes: &[Scenario],
) -> Result<EmbeddingSet, MetricError> {
    let texts: Vec<String> = scenes.iter().map(concat_layers).collect();
    Ok(EmbeddingSet::from_rows(embed_texts(provider, &texts)?)?)
}

/// Computes every selected metric for each layer.
///
/// Component-level metrics are only computed when both corpora are in hard
/// mode. Unavailable scores are recorded as NA rather than failing.
pub fn evaluate(
    gen: &[Scenario],
    refs: &[Scenario],
    provider: &dyn EmbeddingProvider,
    taxonomy: &Taxonomy,
    opts: &EvaluateOptions,
) -> Result<MetricReport, MetricError> {
    let mut report = MetricReport {
        provider_id: provider.id().to_string(),
        generated: gen.len(),
        reference: refs.len(),
        entries: Vec::new(),
    };
    let (m, n) = (gen.len(), refs.len());

    if opts.semantic {
        for k in LayerIndex::ALL {
            let g = embed_corpus(provider, gen, k, &FieldSelector::WholeLayer)?;
            let r = embed_corpus(provider, refs, k, &FieldSelector::WholeLayer)?;
            push_semantic(&mut report, &layer_label(k), &g, &r, opts.semantic_mean)?;
        }
        let g = concat_set(provider, gen)?;
        let r = concat_set(provider, refs)?;
        push_semantic(&mut report, TOTAL_TEXT, &g, &r, opts.semantic_mean)?;
        push_total_mean(&mut report, &["O", "D", "D_ref"]);
    }

    let all_hard = gen.iter().chain(refs).all(|s| !s.mode().is_textual());
    let any = !gen.is_empty() || !refs.is_empty();
    if !(all_hard && any) {
        return Ok(report);
    }

    if opts.component {
        for k in LayerIndex::ALL {
            let label = layer_label(k);
            let cm = layer_component_metrics(gen, refs, k, taxonomy)?;
            report.push(&label, "CO", "max", cm.co, m, n);
            report.push(&label, "CD", "mean", cm.cd_gen, m, 0);
            report.push(&label, "CD_ref", "mean", cm.cd_ref, n, 0);
        }
    }

    for (k, group, field) in &opts.characteristics {
        let name = match field {
            ComponentField::Characteristics => group.clone(),
            other => format!("{group}.{}", other.as_str()),
        };
        let label = layer_label(*k);
        let g = component_text_diversity(gen, *k, group, *field, provider)?;
        report.push(&label, &format!("CharD/{name}"), "min", g, m, 0);
        let r = component_text_diversity(refs, *k, group, *field, provider)?;
        report.push(&label, &format!("CharD_ref/{name}"), "min", r, n, 0);
    }

    if opts.counts {
        for k in LayerIndex::ALL {
            for &group in k.groups() {
                let label = layer_label(k);
                for (metric, scenes) in [("count", gen), ("count_ref", refs)] {
                    let s = match mean_component_count(scenes, k, group) {
                        Ok(v) => Score::of(v),
                        Err(MetricError::EmptySet) => Score::NA,
                        Err(e) => return Err(e),
                    };
                    report.push(&label, &format!("{metric}/{group}"), "mean", s, scenes.len(), 0);
                }
            }
        }
    }

    Ok(report)
}
