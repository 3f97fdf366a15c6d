#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

#[path = "../../../core/tests/support/mod.rs"]
pub mod support;

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn copy_dir(src: &Path, dst: &Path) {
    fs::create_dir_all(dst).unwrap();
    for entry in fs::read_dir(src).unwrap() {
        let entry = entry.unwrap();
        let to = dst.join(entry.file_name());
        if entry.file_type().unwrap().is_dir() {
            copy_dir(&entry.path(), &to);
        } else {
            fs::copy(entry.path(), to).unwrap();
        }
    }
}

/// A copy of the reference part of the fixtures.
pub fn refs_copy(dst: &Path) {
    copy_dir(&fixtures().join("refs"), &dst.join("refs"));
    let manifest: Vec<serde_json::Value> =
        serde_json::from_str(&fs::read_to_string(fixtures().join("manifest.json")).unwrap()).unwrap();
    let refs: Vec<_> = manifest.into_iter().filter(|e| e["role"] == "reference").collect();
    fs::write(dst.join("manifest.json"), serde_json::to_string_pretty(&refs).unwrap()).unwrap();
}

pub fn files_in(dir: &Path) -> usize {
    fs::read_dir(dir).map_or(0, |d| d.filter(|e| e.as_ref().unwrap().path().is_file()).count())
}
