//! On-disk embedding cache and the providers built on it.
//!
//! File format, all integers little-endian:
//!
//! ```text
//! magic  b"SLEMBED1"
//! count  u64
//! count records of:
//!   u16 provider id length, provider id bytes (UTF-8)
//!   [u8; 32] sha256 of the text
//!   u32 dim, then dim f64 values
//! ```
//!
//! Records are written sorted by (provider id, hash) so the file is a pure
//! function of its contents.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use sha2::{Digest, Sha256};

use scenelayer_core::embedding::{Embedding, EmbeddingError, EmbeddingProvider};

use crate::corpus::write_atomic;
use crate::util::bounded_map;

const MAGIC: &[u8; 8] = b"SLEMBED1";

pub const DEFAULT_CONCURRENCY: usize = 4;
pub const DEFAULT_BATCH: usize = 32;

pub type TextHash = [u8; 32];

pub fn text_hash(text: &str) -> TextHash {
    Sha256::digest(text.as_bytes()).into()
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EmbeddingCache {
    path: Option<PathBuf>,
    entries: BTreeMap<(String, TextHash), Vec<f64>>,
}

fn bad(path: &Path, msg: &str) -> EmbeddingError {
    EmbeddingError::ProviderUnavailable(format!("embedding cache {}: {msg}", path.display()))
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let out = self.bytes.get(self.at..self.at.checked_add(n)?)?;
        self.at += n;
        Some(out)
    }

    fn u16(&mut self) -> Option<u16> {
        self.take(2).map(|b| u16::from_le_bytes([b[0], b[1]]))
    }

    fn u32(&mut self) -> Option<u32> {
        self.take(4).map(|b| u32::from_le_bytes(b.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Option<u64> {
        self.take(8).map(|b| u64::from_le_bytes(b.try_into().expect("8 bytes")))
    }
}

impl EmbeddingCache {
    /// In-memory cache that is never written.
    pub fn in_memory() -> Self {
        EmbeddingCache::default()
    }

    /// Opens `path`, starting empty if the file does not exist.
    pub fn open(path: impl Into<PathBuf>) -> Result<Self, EmbeddingError> {
        let path = path.into();
        let mut cache = EmbeddingCache {
            path: Some(path.clone()),
            entries: BTreeMap::new(),
        };
        if path.exists() {
            let bytes = fs::read(&path).map_err(|e| bad(&path, &e.to_string()))?;
            cache.entries = Self::decode(&bytes).ok_or_else(|| bad(&path, "corrupt file"))?;
        }
        Ok(cache)
    }

    fn decode(bytes: &[u8]) -> Option<BTreeMap<(String, TextHash), Vec<f64>>> {
        let mut r = Reader { bytes, at: 0 };
        if r.take(8)? != MAGIC {
            return None;
        }
        let count = r.u64()?;
        let mut entries = BTreeMap::new();
        for _ in 0..count {
            let len = r.u16()? as usize;
            let id = std::str::from_utf8(r.take(len)?).ok()?.to_string();
            let hash: TextHash = r.take(32)?.try_into().ok()?;
            let dim = r.u32()? as usize;
            let values = r
                .take(dim.checked_mul(8)?)?
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                .collect();
            entries.insert((id, hash), values);
        }
        (r.at == bytes.len()).then_some(entries)
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.entries.len() as u64).to_le_bytes());
        for ((id, hash), values) in &self.entries {
            out.extend_from_slice(&(id.len() as u16).to_le_bytes());
            out.extend_from_slice(id.as_bytes());
            out.extend_from_slice(hash);
            out.extend_from_slice(&(values.len() as u32).to_le_bytes());
            for v in values {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, provider_id: &str, text: &str) -> Option<&[f64]> {
        self.get_hashed(provider_id, &text_hash(text))
    }

    fn get_hashed(&self, provider_id: &str, hash: &TextHash) -> Option<&[f64]> {
        self.entries
            .get(&(provider_id.to_string(), *hash))
            .map(Vec::as_slice)
    }

    pub fn insert(&mut self, provider_id: &str, text: &str, values: Vec<f64>) {
        self.entries
            .insert((provider_id.to_string(), text_hash(text)), values);
    }

    /// Dimension of the vectors stored for `provider_id`.
    pub fn dim_of(&self, provider_id: &str) -> Option<usize> {
        self.entries
            .iter()
            .find(|((id, _), _)| id == provider_id)
            .map(|(_, v)| v.len())
    }

    /// Writes the cache to its file, if it has one.
    pub fn save(&self) -> Result<(), EmbeddingError> {
        let Some(path) = &self.path else {
            return Ok(());
        };
        write_atomic(path, &self.encode()).map_err(|e| bad(path, &e.to_string()))
    }
}

/// Serves vectors from a cache and asks `inner` only for missing texts.
pub struct CachedProvider<P> {
    inner: P,
    cache: Mutex<EmbeddingCache>,
    misses: AtomicUsize,
    requests: AtomicUsize,
    pub concurrency: usize,
    pub batch_size: usize,
}

impl<P: EmbeddingProvider> CachedProvider<P> {
    pub fn new(inner: P, cache: EmbeddingCache) -> Self {
        CachedProvider {
            inner,
            cache: Mutex::new(cache),
            misses: AtomicUsize::new(0),
            requests: AtomicUsize::new(0),
            concurrency: DEFAULT_CONCURRENCY,
            batch_size: DEFAULT_BATCH,
        }
    }

    /// Texts not found in the cache so far.
    pub fn misses(&self) -> usize {
        self.misses.load(Ordering::Relaxed)
    }

    /// Batches sent to the inner provider so far.
    pub fn requests(&self) -> usize {
        self.requests.load(Ordering::Relaxed)
    }

    pub fn into_cache(self) -> EmbeddingCache {
        self.cache.into_inner().unwrap_or_else(|e| e.into_inner())
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, EmbeddingCache> {
        self.cache.lock().unwrap_or_else(|e| e.into_inner())
    }
}

impl<P: EmbeddingProvider> EmbeddingProvider for CachedProvider<P> {
    fn id(&self) -> &str {
        self.inner.id()
    }

    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Embedding>, EmbeddingError> {
        let id = self.inner.id().to_string();
        let hashes: Vec<TextHash> = texts.iter().map(|t| text_hash(t)).collect();
        let missing: Vec<String> = {
            let cache = self.lock();
            let mut seen = std::collections::BTreeSet::new();
            texts
                .iter()
                .zip(&hashes)
                .filter(|(_, h)| cache.get_hashed(&id, h).is_none() && seen.insert(**h))
                .map(|(t, _)| t.clone())
                .collect()
        };
        if !missing.is_empty() {
            self.misses.fetch_add(missing.len(), Ordering::Relaxed);
            let chunks: Vec<&[String]> = missing.chunks(self.batch_size.max(1)).collect();
            let results = bounded_map(chunks.len(), self.concurrency, |i| {
                self.requests.fetch_add(1, Ordering::Relaxed);
                self.inner.embed_batch(chunks[i])
            });
            let mut cache = self.lock();
            let mut failure = None;
            for (chunk, rows) in chunks.iter().zip(results) {
                match rows {
                    Ok(rows) if rows.len() == chunk.len() => {
                        for (t, e) in chunk.iter().zip(rows) {
                            cache.insert(&id, t, e.values().to_vec());
                        }
                    }
                    Ok(rows) => {
                        failure.get_or_insert(EmbeddingError::ProviderUnavailable(format!(
                            "provider {id} returned {} rows for {} inputs",
                            rows.len(),
                            chunk.len()
                        )));
                    }
                    Err(e) => {
                        failure.get_or_insert(e);
                    }
                }
            }
            cache.save()?;
            if let Some(e) = failure {
                return Err(e);
            }
        }
        let cache = self.lock();
        hashes
            .iter()
            .map(|h| {
                let values = cache.get_hashed(&id, h).expect("filled above").to_vec();
                Embedding::new(values, id.clone())
            })
            .collect()
    }
}

/// Serves vectors of provider `id` from a cache only; never makes requests.
#[derive(Debug, Clone)]
pub struct ReplayProvider {
    id: String,
    dim: usize,
    cache: EmbeddingCache,
}

impl ReplayProvider {
    pub fn new(id: impl Into<String>, cache: EmbeddingCache) -> Result<Self, EmbeddingError> {
        let id = id.into();
        let dim = cache.dim_of(&id).ok_or_else(|| {
            EmbeddingError::ProviderUnavailable(format!("replay cache has no vectors for provider {id}"))
        })?;
        Ok(ReplayProvider { id, dim, cache })
    }
}

impl EmbeddingProvider for ReplayProvider {
    fn id(&self) -> &str {
        &self.id
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Embedding>, EmbeddingError> {
        texts
            .iter()
            .map(|t| {
                let values = self.cache.get(&self.id, t).ok_or_else(|| {
                    EmbeddingError::ProviderUnavailable(format!(
                        "replay cache has no {} vector for text sha256:{}",
                        self.id,
                        hex::encode(text_hash(t))
                    ))
                })?;
                Embedding::new(values.to_vec(), self.id.clone())
            })
            .collect()
    }
}
