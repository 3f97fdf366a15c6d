mod support;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use scenelayer_core::scenario::{parse_scenario, serialize_scenario};
use scenelayer_core::{ScenarioError, StructureMode, Taxonomy};
use support::gen;
use support::schema::{base, invalid_documents};

#[test]
fn invalid_documents_are_rejected_with_paths() {
    let tax = Taxonomy::default();
    let docs = invalid_documents();
    assert_eq!(docs.len(), 20);
    for (name, doc, want) in docs {
        let err = parse_scenario(&doc.to_string(), StructureMode::Hard, &tax).unwrap_err();
        let path = match &err {
            ScenarioError::SchemaViolation { path, .. } => path.clone(),
            other => panic!("{name}: expected a schema violation, got {other:?}"),
        };
        assert!(path.starts_with(want), "{name}: path {path:?} does not start with {want:?}");
    }
}

#[test]
fn base_document_is_valid() {
    parse_scenario(&base().to_string(), StructureMode::Hard, &Taxonomy::default()).unwrap();
}

#[test]
fn valid_documents_are_byte_stable() {
    let tax = Taxonomy::default();
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    for _ in 0..20 {
        let s = gen::scenario(&mut rng, StructureMode::Hard, &tax);
        let first = serialize_scenario(&s);
        let again = serialize_scenario(&parse_scenario(&first, StructureMode::Hard, &tax).unwrap());
        assert_eq!(first, again);
    }
}
