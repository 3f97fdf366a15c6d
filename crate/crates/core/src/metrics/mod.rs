//! Originality and diversity of a generated corpus against a reference corpus.
//!
//! Both families reduce a matrix of pairwise similarities. Originality of a
//! generated sample takes the max (or, as an out-of-distribution variant, the
//! min) similarity to any reference row; diversity of a sample takes the min,
//! max or mean similarity to every *other* row of its own set. Dataset scores
//! average the sample scores.
//!
//! Pairs whose similarity is undefined (zero-norm embeddings) are skipped and
//! counted in [`Score::na_pairs`]. A score with no defined pair is NA.

mod component;
mod report;

use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::embedding::{cosine, Embedding, EmbeddingError, EmbeddingSet};
use crate::scenario::LayerIndex;

pub use component::{
    characteristics_diversity, component_metrics, component_similarity, component_text_diversity,
    component_vector, layer_component_metrics, layer_component_vector, mean_component_count,
    ComponentField, ComponentMetrics, ComponentVector,
};
pub use report::{
    evaluate, layer_label, EvaluateOptions, MetricEntry, MetricReport, TOTAL_MEAN, TOTAL_TEXT,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricError {
    #[error("reference set is empty")]
    EmptyReference,
    #[error("generated set is empty")]
    EmptyGenerated,
    #[error("diversity needs at least two samples, got {0}")]
    TooFewSamples(usize),
    #[error("row {row} out of range for a set of {len}")]
    RowOutOfRange { row: usize, len: usize },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("no closed category list for {layer}.{group}")]
    NotApplicable { layer: LayerIndex, group: alloc::string::String },
    #[error("scenario {0:?} is not in hard mode")]
    NotHardMode(alloc::string::String),
    #[error("no scenes given")]
    EmptySet,
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
}

/// How the similarities of one sample are reduced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    Min,
    Max,
    Mean,
}

impl Aggregation {
    pub fn as_str(self) -> &'static str {
        match self {
            Aggregation::Min => "min",
            Aggregation::Max => "max",
            Aggregation::Mean => "mean",
        }
    }
}

impl fmt::Display for Aggregation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Originality only uses the extremal similarity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Extremum {
    Min,
    Max,
}

impl From<Extremum> for Aggregation {
    fn from(e: Extremum) -> Self {
        match e {
            Extremum::Min => Aggregation::Min,
            Extremum::Max => Aggregation::Max,
        }
    }
}

/// A metric value, NA when no pair was defined.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Score {
    pub value: Option<f64>,
    pub na_pairs: usize,
}

impl Score {
    pub const NA: Score = Score {
        value: None,
        na_pairs: 0,
    };

    pub fn of(value: f64) -> Score {
        Score {
            value: Some(value),
            na_pairs: 0,
        }
    }

    pub fn is_na(&self) -> bool {
        self.value.is_none()
    }
}

/// Reduces defined similarities in iteration order.
///
/// The mean is summed left to right and kept inside `[min, max]` of its
/// inputs, so `min <= mean <= max` holds exactly in floating point.
pub(crate) fn reduce(values: impl IntoIterator<Item = Option<f64>>, agg: Aggregation) -> Score {
    let mut na_pairs = 0;
    let mut count = 0usize;
    let mut sum = 0.0;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values {
        match v {
            Some(v) => {
                count += 1;
                sum += v;
                lo = lo.min(v);
                hi = hi.max(v);
            }
            None => na_pairs += 1,
        }
    }
    let value = (count > 0).then(|| match agg {
        Aggregation::Min => lo,
        Aggregation::Max => hi,
        Aggregation::Mean => (sum / count as f64).clamp(lo, hi),
    });
    Score { value, na_pairs }
}

/// Mean of sample scores; NA samples are skipped and their pair counts kept.
pub(crate) fn mean_of_scores(scores: impl IntoIterator<Item = Score>) -> Score {
    let mut na_pairs = 0;
    let mut values = Vec::new();
    for s in scores {
        na_pairs += s.na_pairs;
        values.push(s.value);
    }
    Score {
        na_pairs,
        ..reduce(values, Aggregation::Mean)
    }
}

/// Pairwise similarity callback: `Ok(None)` marks an undefined pair.
pub(crate) type PairSim<'a, T> = &'a dyn Fn(&T, &T) -> Result<Option<f64>, MetricError>;

pub(crate) fn originality_of<T>(
    gen: &T,
    refs: &[T],
    mode: Extremum,
    sim: PairSim<'_, T>,
) -> Result<Score, MetricError> {
    if refs.is_empty() {
        return Err(MetricError::EmptyReference);
    }
    let values = refs
        .iter()
        .map(|r| sim(r, gen))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(reduce(values, mode.into()))
}

pub(crate) fn dataset_originality_of<T>(
    gen: &[T],
    refs: &[T],
    mode: Extremum,
    sim: PairSim<'_, T>,
) -> Result<Score, MetricError> {
    if gen.is_empty() {
        return Err(MetricError::EmptyGenerated);
    }
    if refs.is_empty() {
        return Err(MetricError::EmptyReference);
    }
    let scores = gen
        .iter()
        .map(|g| originality_of(g, refs, mode, sim))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(mean_of_scores(scores))
}

pub(crate) fn diversity_of<T>(
    j: usize,
    set: &[T],
    mode: Aggregation,
    sim: PairSim<'_, T>,
) -> Result<Score, MetricError> {
    if set.len() < 2 {
        return Err(MetricError::TooFewSamples(set.len()));
    }
    let Some(target) = set.get(j) else {
        return Err(MetricError::RowOutOfRange {
            row: j,
            len: set.len(),
        });
    };
    let values = set
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != j)
        .map(|(_, other)| sim(other, target))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(reduce(values, mode))
}

pub(crate) fn dataset_diversity_of<T>(
    set: &[T],
    mode: Aggregation,
    sim: PairSim<'_, T>,
) -> Result<Score, MetricError> {
    if set.len() < 2 {
        return Err(MetricError::TooFewSamples(set.len()));
    }
    let scores = (0..set.len())
        .map(|j| diversity_of(j, set, mode, sim))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(mean_of_scores(scores))
}

fn embedding_sim(a: &Embedding, b: &Embedding) -> Result<Option<f64>, MetricError> {
    match cosine(a, b) {
        Ok(c) => Ok(Some(c)),
        Err(EmbeddingError::ZeroNorm) => Ok(None),
        Err(EmbeddingError::DimensionMismatch { left, right }) => {
            Err(MetricError::DimensionMismatch { left, right })
        }
        Err(e) => Err(e.into()),
    }
}

/// Extremal similarity of one generated embedding to the reference rows.
pub fn sample_originality(
    e_gen: &Embedding,
    refs: &EmbeddingSet,
    mode: Extremum,
) -> Result<Score, MetricError> {
    originality_of(e_gen, refs.rows(), mode, &embedding_sim)
}

/// Mean over generated rows of [`sample_originality`].
pub fn dataset_originality(
    gen: &EmbeddingSet,
    refs: &EmbeddingSet,
    mode: Extremum,
) -> Result<Score, MetricError> {
    dataset_originality_of(gen.rows(), refs.rows(), mode, &embedding_sim)
}

/// Similarity of row `j` to the other rows of its set, never to itself.
pub fn sample_diversity(
    j: usize,
    set: &EmbeddingSet,
    mode: Aggregation,
) -> Result<Score, MetricError> {
    diversity_of(j, set.rows(), mode, &embedding_sim)
}

/// Mean over rows of [`sample_diversity`]. Lower is more diverse.
pub fn dataset_diversity(set: &EmbeddingSet, mode: Aggregation) -> Result<Score, MetricError> {
    dataset_diversity_of(set.rows(), mode, &embedding_sim)
}

/// Index and similarity of the closest reference row; ties go to the lowest
/// index. `None` when no pair is defined.
pub fn nearest_reference(
    e_gen: &Embedding,
    refs: &EmbeddingSet,
) -> Result<Option<(usize, f64)>, MetricError> {
    let mut best: Option<(usize, f64)> = None;
    for (i, r) in refs.rows().iter().enumerate() {
        if let Some(c) = embedding_sim(r, e_gen)? {
            if best.is_none_or(|(_, b)| c > b) {
                best = Some((i, c));
            }
        }
    }
    Ok(best)
}
