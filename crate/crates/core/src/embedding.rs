//! Dense text embeddings, cosine similarity, and the provider contract.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::scenario::{layer_text, LayerIndex, Scenario};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EmbeddingError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("zero-norm embedding")]
    ZeroNorm,
    #[error("embedding has no dimensions")]
    Empty,
    #[error("embedding contains a non-finite value at {0}")]
    NonFinite(usize),
    #[error("rows mix providers {left:?} and {right:?}")]
    ProviderMismatch { left: String, right: String },
    #[error("rows and source ids differ in length: {rows} vs {ids}")]
    LengthMismatch { rows: usize, ids: usize },
    #[error("provider unavailable: {0}")]
    ProviderUnavailable(String),
    #[error("field selector resolved to no text for {0}")]
    EmptyField(String),
}

/// A dense real vector produced by a named provider.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    values: Vec<f64>,
    norm_sq: f64,
    provider_id: String,
}

impl Embedding {
    pub fn new(values: Vec<f64>, provider_id: impl Into<String>) -> Result<Self, EmbeddingError> {
        if values.is_empty() {
            return Err(EmbeddingError::Empty);
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(EmbeddingError::NonFinite(i));
        }
        Ok(Embedding {
            norm_sq: dot(&values, &values),
            values,
            provider_id: provider_id.into(),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn provider_id(&self) -> &str {
        &self.provider_id
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.norm_sq)
    }

    /// Multiplies every entry by `alpha`.
    pub fn scaled(&self, alpha: f64) -> Result<Self, EmbeddingError> {
        Embedding::new(
            self.values.iter().map(|v| v * alpha).collect(),
            self.provider_id.clone(),
        )
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Cosine similarity over raw slices.
///
/// Computed as `a·b / sqrt(|a|² |b|²)` so identical inputs give exactly 1.0.
/// The result is bounded to [-1, 1] against rounding; negative values are
/// returned as is.
pub fn cosine_slices(a: &[f64], b: &[f64]) -> Result<f64, EmbeddingError> {
    if a.len() != b.len() {
        return Err(EmbeddingError::DimensionMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    cosine_parts(a, b, dot(a, a), dot(b, b))
}

fn cosine_parts(a: &[f64], b: &[f64], aa: f64, bb: f64) -> Result<f64, EmbeddingError> {
    if aa == 0.0 || bb == 0.0 {
        return Err(EmbeddingError::ZeroNorm);
    }
    Ok((dot(a, b) / libm::sqrt(aa * bb)).clamp(-1.0, 1.0))
}

pub fn cosine(a: &Embedding, b: &Embedding) -> Result<f64, EmbeddingError> {
    if a.dim() != b.dim() {
        return Err(EmbeddingError::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    cosine_parts(&a.values, &b.values, a.norm_sq, b.norm_sq)
}

/// Dimension of the local bag-of-tokens space.
pub const LOCAL_DIM: usize = 256;

/// Provider id of [`LocalProvider`].
pub const LOCAL_PROVIDER_ID: &str = "local-bow-256";

pub(crate) fn fnv1a(bytes: &[u8]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    bytes
        .iter()
        .fold(OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(PRIME))
}

/// Lowercased alphanumeric tokens.
pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
}

/// Bucket of a token in the local space.
pub fn token_bucket(token: &str) -> usize {
    (fnv1a(token.as_bytes()) % LOCAL_DIM as u64) as usize
}

/// Deterministic offline embedding: hashed token counts in 256 buckets.
///
/// Empty text gives the zero vector.
pub fn local_embed(text: &str) -> Embedding {
    let mut counts = vec![0.0f64; LOCAL_DIM];
    for token in tokenize(text) {
        counts[token_bucket(&token)] += 1.0;
    }
    Embedding {
        norm_sq: dot(&counts, &counts),
        values: counts,
        provider_id: LOCAL_PROVIDER_ID.to_string(),
    }
}

/// Something that turns texts into embeddings.
///
/// The same `(id, text)` must always give the same vector.
pub trait EmbeddingProvider: Sync {
    fn id(&self) -> &str;
    fn dim(&self) -> usize;
    /// Embeds `texts`, preserving order.
    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Embedding>, EmbeddingError>;
}

impl<P: EmbeddingProvider + ?Sized> EmbeddingProvider for &P {
    fn id(&self) -> &str {
        (**self).id()
    }

    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Embedding>, EmbeddingError> {
        (**self).embed_batch(texts)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LocalProvider;

impl EmbeddingProvider for LocalProvider {
    fn id(&self) -> &str {
        LOCAL_PROVIDER_ID
    }

    fn dim(&self) -> usize {
        LOCAL_DIM
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Embedding>, EmbeddingError> {
        Ok(texts.iter().map(|t| local_embed(t)).collect())
    }
}

/// Which text of a layer to embed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FieldSelector {
    WholeLayer,
    /// The characteristics of the `position`-th component of `group`.
    Characteristics { group: String, position: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceId {
    pub scenario_id: String,
    pub layer: LayerIndex,
    pub field: FieldSelector,
}

/// Embeddings of one layer (or field) across a corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    rows: Vec<Embedding>,
    source_ids: Vec<SourceId>,
}

impl EmbeddingSet {
    pub fn new(rows: Vec<Embedding>, source_ids: Vec<SourceId>) -> Result<Self, EmbeddingError> {
        if rows.len() != source_ids.len() {
            return Err(EmbeddingError::LengthMismatch {
                rows: rows.len(),
                ids: source_ids.len(),
            });
        }
        Self::check_rows(&rows)?;
        Ok(EmbeddingSet { rows, source_ids })
    }

    /// A set without source ids, for vectors that don't come from scenarios.
    pub fn from_rows(rows: Vec<Embedding>) -> Result<Self, EmbeddingError> {
        Self::check_rows(&rows)?;
        Ok(EmbeddingSet {
            rows,
            source_ids: Vec::new(),
        })
    }

    fn check_rows(rows: &[Embedding]) -> Result<(), EmbeddingError> {
        if let Some(first) = rows.first() {
            for r in &rows[1..] {
                if r.dim() != first.dim() {
                    return Err(EmbeddingError::DimensionMismatch {
                        left: first.dim(),
                        right: r.dim(),
                    });
                }
                if r.provider_id != first.provider_id {
                    return Err(EmbeddingError::ProviderMismatch {
                        left: first.provider_id.clone(),
                        right: r.provider_id.clone(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn rows(&self) -> &[Embedding] {
        &self.rows
    }

    /// Empty when built with [`EmbeddingSet::from_rows`].
    pub fn source_ids(&self) -> &[SourceId] {
        &self.source_ids
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.rows.first().map(Embedding::dim)
    }
}

/// Text of `field` in layer `k` of `s`.
pub fn field_text(s: &Scenario, k: LayerIndex, field: &FieldSelector) -> Result<String, EmbeddingError> {
    match field {
        FieldSelector::WholeLayer => Ok(layer_text(s, k)),
        FieldSelector::Characteristics { group, position } => s
            .components(k, group)
            .and_then(|c| c.get(*position))
            .map(|c| c.characteristics.clone())
            .filter(|t| !t.trim().is_empty())
            .ok_or_else(|| {
                EmbeddingError::EmptyField(alloc::format!("{}/{k}.{group}[{position}]", s.id))
            }),
    }
}

/// Embeds one field of layer `k` for every scenario, in input order.
pub fn embed_corpus(
    provider: &dyn EmbeddingProvider,
    scenarios: &[Scenario],
    k: LayerIndex,
    field: &FieldSelector,
) -> Result<EmbeddingSet, EmbeddingError> {
    let texts = scenarios
        .iter()
        .map(|s| field_text(s, k, field))
        .collect::<Result<Vec<_>, _>>()?;
    let ids = scenarios
        .iter()
        .map(|s| SourceId {
            scenario_id: s.id.clone(),
            layer: k,
            field: field.clone(),
        })
        .collect();
    let rows = embed_texts(provider, &texts)?;
    EmbeddingSet::new(rows, ids)
}

/// Embeds texts and checks the provider returned one row per input.
pub fn embed_texts(
    provider: &dyn EmbeddingProvider,
    texts: &[String],
) -> Result<Vec<Embedding>, EmbeddingError> {
    if texts.is_empty() {
        return Ok(Vec::new());
    }
    let rows = provider.embed_batch(texts)?;
    if rows.len() != texts.len() {
        return Err(EmbeddingError::ProviderUnavailable(alloc::format!(
            "provider {} returned {} rows for {} inputs",
            provider.id(),
            rows.len(),
            texts.len()
        )));
    }
    Ok(rows)
}
