mod common;

use std::fs;
use std::path::Path;
use std::process::Command;

use scenelayer::cli::run;
use scenelayer::corpus::{load_corpus, Manifest, Role};
use scenelayer::error::exit;
use scenelayer::pipeline::{run_generate, GenerateConfig};
use scenelayer_core::augment::{MockClient, MockFaults, PromptBuilder};
use scenelayer_core::{LayerIndex, Taxonomy};

fn sl(args: &[&str]) -> i32 {
    run(std::iter::once("scenelayer").chain(args.iter().copied()))
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn refs_dir() -> String {
    common::fixtures().join("refs").to_str().unwrap().to_string()
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(sl(&["--help"]), exit::OK);
    assert_eq!(sl(&["--version"]), exit::OK);
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    common::refs_copy(dir.path());
    let d = p(dir.path());
    assert_eq!(sl(&[]), exit::USAGE);
    assert_eq!(sl(&["frobnicate"]), exit::USAGE);
    assert_eq!(sl(&["generate", "--refs", d, "--out", d, "--layers", "6"]), exit::USAGE);
    assert_eq!(sl(&["generate", "--refs", d, "--out", d, "--structure", "rigid"]), exit::USAGE);
    assert_eq!(sl(&["generate", "--refs", d, "--out", d, "--context", "joint"]), exit::USAGE);
    assert_eq!(sl(&["generate", "--refs", d, "--out", d, "--variants", "0"]), exit::USAGE);
    assert_eq!(sl(&["evaluate", "--gen", d, "--refs", d, "--format", "xml"]), exit::USAGE);
    assert_eq!(sl(&["evaluate", "--gen", d, "--refs", d, "--provider", "magic"]), exit::USAGE);
    assert_eq!(sl(&["embed", "--refs", d]), exit::USAGE);
    assert!(!dir.path().join("generated").exists());
}

#[test]
fn ingest_then_duplicate_ingest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("corpus");
    assert_eq!(sl(&["ingest", &refs_dir(), "--out", p(&out)]), exit::OK);
    let m = Manifest::read(&out.join("manifest.json")).unwrap();
    assert_eq!(m.entries.len(), 10);
    assert!(m.entries.iter().all(|e| e.role == Role::Reference && e.file.starts_with("refs/")));
    for e in &m.entries {
        let shipped = fs::read(common::fixtures().join(&e.file)).unwrap();
        assert_eq!(fs::read(out.join(&e.file)).unwrap(), shipped, "{}", e.file);
    }
    assert_eq!(sl(&["ingest", &refs_dir(), "--out", p(&out)]), exit::CORPUS);
    assert_eq!(Manifest::read(&out.join("manifest.json")).unwrap(), m);
}

#[test]
fn ingest_rejects_invalid_documents_atomically() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in");
    common::copy_dir(&common::fixtures().join("refs"), &input);
    fs::write(input.join("zz-bad.json"), r#"{"id":"x","layers":[]}"#).unwrap();
    let out = dir.path().join("corpus");
    assert_eq!(sl(&["ingest", p(&input), "--out", p(&out)]), exit::SCHEMA);
    assert!(!out.join("manifest.json").exists());
    fs::write(input.join("zz-bad.json"), "not json").unwrap();
    assert_eq!(sl(&["ingest", p(&input), "--out", p(&out)]), exit::SCHEMA);
    assert_eq!(sl(&["ingest", p(&dir.path().join("nope.json")), "--out", p(&out)]), exit::IO);
}

#[test]
fn generate_evaluate_report_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    common::refs_copy(dir.path());
    let d = p(dir.path());
    assert_eq!(
        sl(&["generate", "--refs", d, "--out", d, "--layers", "4", "--run-id", "l4", "--seed", "11"]),
        exit::OK
    );
    assert_eq!(common::files_in(&dir.path().join("generated/l4")), 100);
    let tax = Taxonomy::default();
    let gen = load_corpus(dir.path(), Some(Role::Generated), &tax).unwrap();
    assert_eq!(gen.len(), 100);
    assert!(gen
        .scenarios
        .iter()
        .all(|s| s.provenance.as_ref().unwrap().edited_layer == LayerIndex::L4));

    let md = dir.path().join("report.md");
    let json = dir.path().join("report.json");
    let again = dir.path().join("again.md");
    assert_eq!(sl(&["evaluate", "--gen", d, "--refs", d, "--out", p(&md)]), exit::OK);
    assert_eq!(
        sl(&["evaluate", "--gen", d, "--refs", d, "--format", "json", "--out", p(&json)]),
        exit::OK
    );
    assert_eq!(sl(&["report", "--input", p(&json), "--out", p(&again)]), exit::OK);
    let md_text = fs::read_to_string(&md).unwrap();
    assert_eq!(md_text, fs::read_to_string(&again).unwrap());
    assert!(md_text.contains("generated: 100 | reference: 10"));
    assert_eq!(sl(&["report", "--input", p(&md)]), exit::USAGE);

    // a second run with the same id collides
    assert_eq!(
        sl(&["generate", "--refs", d, "--out", d, "--layers", "4", "--run-id", "l4", "--seed", "11"]),
        exit::CORPUS
    );
}

#[test]
fn generation_is_reproducible_from_the_cli() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        common::refs_copy(dir.path());
        let d = p(dir.path());
        let args = ["generate", "--refs", d, "--out", d, "--layers", "2,5", "--variants", "3", "--run-id", "r", "--seed", "5", "--context", "shared", "--structure", "soft"];
        assert_eq!(sl(&args), exit::OK);
    }
    let ma = fs::read(a.path().join("manifest.json")).unwrap();
    let mb = fs::read(b.path().join("manifest.json")).unwrap();
    assert_eq!(ma, mb);
}

#[test]
fn tampered_files_fail_checksum() {
    let dir = tempfile::tempdir().unwrap();
    common::refs_copy(dir.path());
    let f = dir.path().join("refs/scene-0061.json");
    let mut text = fs::read_to_string(&f).unwrap();
    text.push(' ');
    fs::write(&f, text).unwrap();
    let d = p(dir.path());
    assert_eq!(sl(&["generate", "--refs", d, "--out", d, "--layers", "1"]), exit::CORPUS);
    assert_eq!(sl(&["evaluate", "--gen", d, "--refs", d]), exit::CORPUS);
}

#[test]
fn missing_paths_are_io_errors() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing");
    let m = p(&missing);
    assert_eq!(sl(&["generate", "--refs", m, "--out", m]), exit::IO);
    assert_eq!(sl(&["evaluate", "--gen", m, "--refs", m]), exit::IO);
    assert_eq!(sl(&["report", "--input", m]), exit::IO);
}

#[test]
fn replay_without_entries_is_provider_unavailable() {
    let dir = tempfile::tempdir().unwrap();
    common::refs_copy(dir.path());
    let d = p(dir.path());
    let cache = dir.path().join("none.cache");
    assert_eq!(
        sl(&["evaluate", "--gen", d, "--refs", d, "--provider", "replay:local-bow-256", "--embed-cache", p(&cache)]),
        exit::PROVIDER_UNAVAILABLE
    );
    assert_eq!(sl(&["embed", "--refs", d, "--embed-cache", p(&cache)]), exit::OK);
    assert!(cache.exists());
    assert_eq!(
        sl(&["evaluate", "--gen", d, "--refs", d, "--provider", "replay:local-bow-256", "--embed-cache", p(&cache)]),
        exit::OK
    );
    assert_eq!(
        sl(&["evaluate", "--gen", d, "--refs", d, "--provider", "replay:other", "--embed-cache", p(&cache)]),
        exit::PROVIDER_UNAVAILABLE
    );
}

#[test]
fn unreachable_llm_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    common::refs_copy(dir.path());
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let before = fs::read(dir.path().join("manifest.json")).unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_scenelayer"))
        .args(["generate", "--refs", p(dir.path()), "--out", p(dir.path()), "--layers", "1", "--variants", "1"])
        .env("LLM_ENDPOINT", format!("http://127.0.0.1:{port}/"))
        .env("LLM_MODEL", "m")
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(exit::CLIENT_UNAVAILABLE));
    assert_eq!(fs::read(dir.path().join("manifest.json")).unwrap(), before);
    assert!(!dir.path().join("generated").exists());
}

fn fault_run(faults: MockFaults, strict: bool) -> (tempfile::TempDir, scenelayer::Result<scenelayer::pipeline::GenerateSummary>) {
    let dir = tempfile::tempdir().unwrap();
    common::refs_copy(dir.path());
    let tax = Taxonomy::default();
    let refs = load_corpus(dir.path(), Some(Role::Reference), &tax).unwrap();
    let client = MockClient::new(1).with_faults(faults);
    let cfg = GenerateConfig {
        layers: vec![LayerIndex::L2],
        variants: 2,
        run_id: "f".into(),
        strict,
        ..GenerateConfig::default()
    };
    let out = run_generate(&refs, &client, &PromptBuilder::default(), &cfg, dir.path());
    (dir, out)
}

#[test]
fn strict_quarantine_exits_nine_after_recording_rejects() {
    let faults = MockFaults {
        touch_other_layer: true,
        ..MockFaults::default()
    };
    let (dir, out) = fault_run(faults, true);
    let err = out.unwrap_err();
    assert_eq!(err.exit_code(), exit::STRICT_QUARANTINE);
    assert_eq!(common::files_in(&dir.path().join("generated/f/rejects")), 40);

    let (_, out) = fault_run(faults, false);
    let summary = out.unwrap();
    assert_eq!((summary.generated, summary.quarantined), (0, 20));
}

#[test]
fn exhausted_repairs_exit_eight_and_write_nothing() {
    let faults = MockFaults {
        always_invalid: true,
        ..MockFaults::default()
    };
    let (dir, out) = fault_run(faults, false);
    assert_eq!(out.unwrap_err().exit_code(), exit::EXHAUSTED_REPAIRS);
    assert!(!dir.path().join("generated").exists());
}

#[test]
fn shipped_config_files_match_built_in_defaults() {
    let f = common::fixtures();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    common::refs_copy(a.path());
    common::refs_copy(b.path());
    let base = ["generate", "--layers", "1,4", "--variants", "2", "--run-id", "cfg", "--seed", "3"];
    let (da, db) = (p(a.path()), p(b.path()));
    let mut plain: Vec<&str> = base.to_vec();
    plain.extend(["--refs", da, "--out", da, "--structure", "soft"]);
    assert_eq!(sl(&plain), exit::OK);
    let tax = f.join("taxonomy.json");
    let tasks = f.join("tasks.json");
    let system = f.join("system_prompt.txt");
    let mut explicit: Vec<&str> = base.to_vec();
    explicit.extend(["--refs", db, "--out", db, "--structure", "soft"]);
    explicit.extend(["--taxonomy", p(&tax), "--tasks", p(&tasks), "--system-prompt", p(&system)]);
    assert_eq!(sl(&explicit), exit::OK);
    assert_eq!(
        fs::read(a.path().join("manifest.json")).unwrap(),
        fs::read(b.path().join("manifest.json")).unwrap()
    );
}
