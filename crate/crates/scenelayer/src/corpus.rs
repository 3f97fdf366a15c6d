//! Scenario corpora on disk: one file per scenario plus a checksummed
//! manifest.
//!
//! Layout of a corpus root:
//!
//! ```text
//! manifest.json
//! refs/<id>.json
//! generated/<run-id>/<id>.json
//! generated/<run-id>/rejects/<id>.json
//! generated/<run-id>/rejects/<id>.violations.json
//! ```

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use scenelayer_core::augment::Quarantined;
use scenelayer_core::scenario::{detect_mode, parse_scenario, serialize_scenario};
use scenelayer_core::{Scenario, ScenarioError, Taxonomy};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const REFS_DIR: &str = "refs";
pub const GENERATED_DIR: &str = "generated";
pub const REJECTS_DIR: &str = "rejects";

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: bad manifest: {message}")]
    Manifest { path: PathBuf, message: String },
    #[error("{file}: checksum mismatch (manifest {expected}, file {actual})")]
    ChecksumMismatch {
        file: PathBuf,
        expected: String,
        actual: String,
    },
    #[error("{file}: {source}")]
    Schema {
        file: PathBuf,
        #[source]
        source: ScenarioError,
    },
    #[error("duplicate scenario id {0:?}")]
    DuplicateId(String),
    #[error("manifest mixes roles; select one")]
    MixedRoles,
    #[error("{path}: corpus is locked by another writer")]
    Locked { path: PathBuf },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Reference,
    Generated,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    /// Path relative to the corpus root, with `/` separators.
    pub file: String,
    pub role: Role,
    /// `sha256:<hex>` of the file bytes.
    pub checksum: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn contains(&self, id: &str) -> bool {
        self.entries.iter().any(|e| e.id == id)
    }

    pub fn read(path: &Path) -> Result<Self, CorpusError> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        serde_json::from_str(&text).map_err(|e| CorpusError::Manifest {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    /// Reads `path`, or an empty manifest if it does not exist.
    pub fn read_or_default(path: &Path) -> Result<Self, CorpusError> {
        if path.exists() {
            Manifest::read(path)
        } else {
            Ok(Manifest::default())
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}

pub fn checksum(bytes: &[u8]) -> String {
    format!("sha256:{}", hex::encode(Sha256::digest(bytes)))
}

/// Resolves a corpus argument to its manifest file. A directory means its
/// `manifest.json`.
pub fn manifest_path(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.join(MANIFEST_FILE)
    } else {
        path.to_path_buf()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub role: Option<Role>,
    pub scenarios: Vec<Scenario>,
    pub manifest_path: PathBuf,
}

impl Corpus {
    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Scenario> {
        self.scenarios.iter().find(|s| s.id == id)
    }
}

/// Loads every entry of `role` (or all entries when the manifest has a
/// single role) in manifest order. Fails without returning anything on the
/// first bad file.
pub fn load_corpus(path: &Path, role: Option<Role>, taxonomy: &Taxonomy) -> Result<Corpus, CorpusError> {
    let manifest_path = manifest_path(path);
    let manifest = Manifest::read(&manifest_path)?;
    let root = manifest_path.parent().unwrap_or(Path::new("."));
    let roles: BTreeSet<Role> = manifest.entries.iter().map(|e| e.role).collect();
    let role = match role {
        Some(r) => Some(r),
        None if roles.len() > 1 => return Err(CorpusError::MixedRoles),
        None => roles.into_iter().next(),
    };
    let mut seen = BTreeSet::new();
    let mut scenarios = Vec::new();
    for entry in manifest.entries.iter().filter(|e| Some(e.role) == role) {
        if !seen.insert(entry.id.as_str()) {
            return Err(CorpusError::DuplicateId(entry.id.clone()));
        }
        let file = root.join(&entry.file);
        let bytes = fs::read(&file).map_err(io_err(&file))?;
        let actual = checksum(&bytes);
        if actual != entry.checksum {
            return Err(CorpusError::ChecksumMismatch {
                file,
                expected: entry.checksum.clone(),
                actual,
            });
        }
        let schema = |source| CorpusError::Schema {
            file: file.clone(),
            source,
        };
        let text = String::from_utf8(bytes)
            .map_err(|e| schema(ScenarioError::MalformedDocument(e.to_string())))?;
        let mode = detect_mode(&text).map_err(schema)?;
        let s = parse_scenario(&text, mode, taxonomy).map_err(schema)?;
        if s.id != entry.id {
            return Err(schema(ScenarioError::SchemaViolation {
                path: "id".into(),
                message: format!("document id {:?} differs from manifest id {:?}", s.id, entry.id),
            }));
        }
        scenarios.push(s);
    }
    Ok(Corpus {
        role,
        scenarios,
        manifest_path,
    })
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CorpusError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut builder = tempfile::Builder::new();
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        builder.permissions(fs::Permissions::from_mode(0o644));
    }
    let mut tmp = builder.tempfile_in(dir).map_err(io_err(dir))?;
    tmp.write_all(bytes).map_err(io_err(path))?;
    tmp.as_file().sync_all().map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| CorpusError::Io {
        path: path.to_path_buf(),
        source: e.error,
    })?;
    Ok(())
}

struct ManifestLock(PathBuf);

impl ManifestLock {
    fn acquire(manifest: &Path) -> Result<Self, CorpusError> {
        let mut name = manifest.as_os_str().to_owned();
        name.push(".lock");
        let path = PathBuf::from(name);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(io_err(dir))?;
        }
        match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(ManifestLock(path)),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                Err(CorpusError::Locked { path })
            }
            Err(e) => Err(io_err(&path)(e)),
        }
    }
}

impl Drop for ManifestLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

fn check_batch_ids<'a>(
    manifest: &Manifest,
    ids: impl IntoIterator<Item = &'a str>,
) -> Result<(), CorpusError> {
    let mut seen = BTreeSet::new();
    for id in ids {
        if !seen.insert(id) || manifest.contains(id) {
            return Err(CorpusError::DuplicateId(id.to_string()));
        }
    }
    Ok(())
}

fn safe_file_stem(id: &str) -> Result<&str, CorpusError> {
    let ok = !id.is_empty()
        && id != "."
        && id != ".."
        && id.chars().all(|c| c.is_alphanumeric() || matches!(c, '-' | '_' | '.'));
    if ok {
        Ok(id)
    } else {
        Err(CorpusError::Manifest {
            path: PathBuf::from(id),
            message: "scenario id is not usable as a file name".into(),
        })
    }
}

/// Writes one file per scenario under `root/rel_dir` and appends them to
/// the root manifest. Duplicate ids are rejected before anything is
/// written; an empty batch leaves the manifest untouched.
pub fn save_scenarios(root: &Path, rel_dir: &str, role: Role, batch: &[Scenario]) -> Result<Manifest, CorpusError> {
    let manifest_file = root.join(MANIFEST_FILE);
    let _lock = ManifestLock::acquire(&manifest_file)?;
    let mut manifest = Manifest::read_or_default(&manifest_file)?;
    check_batch_ids(&manifest, batch.iter().map(|s| s.id.as_str()))?;
    for s in batch {
        safe_file_stem(&s.id)?;
    }
    if batch.is_empty() {
        return Ok(manifest);
    }
    for s in batch {
        let rel = format!("{rel_dir}/{}.json", s.id);
        let text = serialize_scenario(s);
        write_atomic(&root.join(&rel), text.as_bytes())?;
        manifest.entries.push(ManifestEntry {
            id: s.id.clone(),
            file: rel,
            role,
            checksum: checksum(text.as_bytes()),
        });
    }
    write_atomic(&manifest_file, manifest.to_json().as_bytes())?;
    Ok(manifest)
}

pub fn run_dir(run_id: &str) -> String {
    format!("{GENERATED_DIR}/{run_id}")
}

/// Persists accepted scenarios of a run and writes quarantined ones, with
/// their violations, under the run's `rejects/` directory.
pub fn save_generated(
    root: &Path,
    run_id: &str,
    batch: &[Scenario],
    rejects: &[Quarantined],
) -> Result<Manifest, CorpusError> {
    safe_file_stem(run_id)?;
    let mut seen = BTreeSet::new();
    for q in rejects {
        safe_file_stem(&q.scenario.id)?;
        if !seen.insert(q.scenario.id.as_str()) {
            return Err(CorpusError::DuplicateId(q.scenario.id.clone()));
        }
    }
    let manifest = save_scenarios(root, &run_dir(run_id), Role::Generated, batch)?;
    let reject_dir = root.join(run_dir(run_id)).join(REJECTS_DIR);
    for q in rejects {
        let id = &q.scenario.id;
        write_atomic(
            &reject_dir.join(format!("{id}.json")),
            serialize_scenario(&q.scenario).as_bytes(),
        )?;
        let layers: Vec<String> = q.violations.iter().map(|k| k.key()).collect();
        let report = serde_json::json!({
            "id": id,
            "violations": layers,
            "message": format!("edit changed non-target layer(s) {}", layers.join(", ")),
        });
        let mut text = serde_json::to_string_pretty(&report).expect("json");
        text.push('\n');
        write_atomic(&reject_dir.join(format!("{id}.violations.json")), text.as_bytes())?;
    }
    Ok(manifest)
}
