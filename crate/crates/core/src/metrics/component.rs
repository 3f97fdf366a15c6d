//! Metrics on hard-mode component structure rather than free text.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use super::{
    dataset_diversity_of, dataset_originality_of, Aggregation, Extremum, MetricError, Score,
};
use crate::embedding::{embed_texts, EmbeddingProvider, EmbeddingSet};
use crate::metrics::dataset_diversity;
use crate::scenario::{CategoryLookup, Component, LayerIndex, Scenario, Taxonomy};

/// Category counts of one (layer, group); entry `c` counts components whose
/// category is the `c`-th taxonomy entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentVector {
    pub counts: Vec<u64>,
    pub layer: LayerIndex,
    pub group: String,
}

impl ComponentVector {
    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

fn hard_components<'a>(
    s: &'a Scenario,
    k: LayerIndex,
    group: &str,
) -> Result<&'a [Component], MetricError> {
    if s.mode().is_textual() {
        return Err(MetricError::NotHardMode(s.id.clone()));
    }
    s.components(k, group).ok_or_else(|| MetricError::NotApplicable {
        layer: k,
        group: group.to_string(),
    })
}

pub fn component_vector(
    s: &Scenario,
    k: LayerIndex,
    group: &str,
    taxonomy: &Taxonomy,
) -> Result<ComponentVector, MetricError> {
    let comps = hard_components(s, k, group)?;
    let categories = taxonomy
        .categories(k, group)
        .ok_or_else(|| MetricError::NotApplicable {
            layer: k,
            group: group.to_string(),
        })?;
    let mut counts = vec![0u64; categories.len()];
    for c in comps {
        // Parsing guarantees membership; anything else is a construction bug
        // in the caller and is not counted.
        if let CategoryLookup::Match { position, .. } = taxonomy.lookup(k, group, &c.category) {
            counts[position] += 1;
        }
    }
    Ok(ComponentVector {
        counts,
        layer: k,
        group: group.to_string(),
    })
}

/// Cosine on counts, extended so two empty layers are identical (1.0) and
/// an empty layer is orthogonal to a non-empty one (0.0).
pub fn component_similarity(u: &ComponentVector, v: &ComponentVector) -> Result<f64, MetricError> {
    if u.dim() != v.dim() {
        return Err(MetricError::DimensionMismatch {
            left: u.dim(),
            right: v.dim(),
        });
    }
    let dot = |a: &[u64], b: &[u64]| -> f64 {
        a.iter().zip(b).map(|(&x, &y)| (x as f64) * (y as f64)).sum()
    };
    let uu = dot(&u.counts, &u.counts);
    let vv = dot(&v.counts, &v.counts);
    Ok(match (uu == 0.0, vv == 0.0) {
        (true, true) => 1.0,
        (true, false) | (false, true) => 0.0,
        (false, false) => (dot(&u.counts, &v.counts) / libm::sqrt(uu * vv)).min(1.0),
    })
}

fn vector_sim(a: &ComponentVector, b: &ComponentVector) -> Result<Option<f64>, MetricError> {
    component_similarity(a, b).map(Some)
}

/// Component originality and diversity of one (layer, group).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComponentMetrics {
    /// Max-similarity originality of the generated vectors.
    pub co: Score,
    /// Mean-similarity diversity within the generated set.
    pub cd_gen: Score,
    /// Mean-similarity diversity within the reference set.
    pub cd_ref: Score,
}

impl ComponentMetrics {
    pub const NA: ComponentMetrics = ComponentMetrics {
        co: Score::NA,
        cd_gen: Score::NA,
        cd_ref: Score::NA,
    };
}

/// CO and CD for one (layer, group).
///
/// Groups without a closed category list (layer 3 by default) yield NA for
/// all three scores, as do sets too small for the metric.
pub fn component_metrics(
    gen: &[Scenario],
    refs: &[Scenario],
    k: LayerIndex,
    group: &str,
    taxonomy: &Taxonomy,
) -> Result<ComponentMetrics, MetricError> {
    if taxonomy.categories(k, group).is_none() {
        for s in gen.iter().chain(refs) {
            hard_components(s, k, group)?;
        }
        return Ok(ComponentMetrics::NA);
    }
    metrics_over(gen, refs, |s| component_vector(s, k, group, taxonomy))
}

/// Concatenation of the count vectors of every group of layer `k` that has a
/// closed category list, in template order.
pub fn layer_component_vector(
    s: &Scenario,
    k: LayerIndex,
    taxonomy: &Taxonomy,
) -> Result<ComponentVector, MetricError> {
    let groups: Vec<&str> = k
        .groups()
        .iter()
        .copied()
        .filter(|g| taxonomy.categories(k, g).is_some())
        .collect();
    if groups.is_empty() {
        return Err(MetricError::NotApplicable {
            layer: k,
            group: k.groups().join("+"),
        });
    }
    let mut counts = Vec::new();
    for g in &groups {
        counts.extend(component_vector(s, k, g, taxonomy)?.counts);
    }
    Ok(ComponentVector {
        counts,
        layer: k,
        group: groups.join("+"),
    })
}

/// CO and CD of a whole layer using [`layer_component_vector`].
pub fn layer_component_metrics(
    gen: &[Scenario],
    refs: &[Scenario],
    k: LayerIndex,
    taxonomy: &Taxonomy,
) -> Result<ComponentMetrics, MetricError> {
    if k.groups().iter().all(|g| taxonomy.categories(k, g).is_none()) {
        for s in gen.iter().chain(refs) {
            if s.mode().is_textual() {
                return Err(MetricError::NotHardMode(s.id.clone()));
            }
        }
        return Ok(ComponentMetrics::NA);
    }
    metrics_over(gen, refs, |s| layer_component_vector(s, k, taxonomy))
}

fn metrics_over(
    gen: &[Scenario],
    refs: &[Scenario],
    vectorize: impl Fn(&Scenario) -> Result<ComponentVector, MetricError>,
) -> Result<ComponentMetrics, MetricError> {
    let gen_v = gen.iter().map(&vectorize).collect::<Result<Vec<_>, _>>()?;
    let ref_v = refs.iter().map(&vectorize).collect::<Result<Vec<_>, _>>()?;
    let co = match dataset_originality_of(&gen_v, &ref_v, Extremum::Max, &vector_sim) {
        Ok(s) => s,
        Err(MetricError::EmptyGenerated | MetricError::EmptyReference) => Score::NA,
        Err(e) => return Err(e),
    };
    let cd = |set: &[ComponentVector]| match dataset_diversity_of(set, Aggregation::Mean, &vector_sim) {
        Ok(s) => Ok(s),
        Err(MetricError::TooFewSamples(_)) => Ok(Score::NA),
        Err(e) => Err(e),
    };
    Ok(ComponentMetrics {
        co,
        cd_gen: cd(&gen_v)?,
        cd_ref: cd(&ref_v)?,
    })
}

/// Which free-text field of a component to compare.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ComponentField {
    Characteristics,
    Motion,
}

impl ComponentField {
    pub fn as_str(self) -> &'static str {
        match self {
            ComponentField::Characteristics => "characteristics",
            ComponentField::Motion => "motion",
        }
    }

    fn text(self, c: &Component) -> Option<&str> {
        let t = match self {
            ComponentField::Characteristics => Some(c.characteristics.as_str()),
            ComponentField::Motion => c.motion.as_deref(),
        };
        t.filter(|t| !t.trim().is_empty())
    }
}

/// Min-mode diversity over the embedded `field` text of every component in
/// (layer, group) across all scenes. NA with fewer than two texts.
pub fn component_text_diversity(
    scenes: &[Scenario],
    k: LayerIndex,
    group: &str,
    field: ComponentField,
    provider: &dyn EmbeddingProvider,
) -> Result<Score, MetricError> {
    let mut texts = Vec::new();
    for s in scenes {
        texts.extend(
            hard_components(s, k, group)?
                .iter()
                .filter_map(|c| field.text(c))
                .map(String::from),
        );
    }
    if texts.len() < 2 {
        return Ok(Score::NA);
    }
    let set = EmbeddingSet::from_rows(embed_texts(provider, &texts)?)?;
    dataset_diversity(&set, Aggregation::Min)
}

pub fn characteristics_diversity(
    scenes: &[Scenario],
    k: LayerIndex,
    group: &str,
    provider: &dyn EmbeddingProvider,
) -> Result<Score, MetricError> {
    component_text_diversity(scenes, k, group, ComponentField::Characteristics, provider)
}

/// Mean number of components per scene in (layer, group).
pub fn mean_component_count(
    scenes: &[Scenario],
    k: LayerIndex,
    group: &str,
) -> Result<f64, MetricError> {
    if scenes.is_empty() {
        return Err(MetricError::EmptySet);
    }
    let mut total = 0usize;
    for s in scenes {
        total += hard_components(s, k, group)?.len();
    }
    Ok(total as f64 / scenes.len() as f64)
}
