//! Random valid scenarios.
#![allow(dead_code)]

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use scenelayer_core::scenario::{LayerBody, StructuredBody};
use scenelayer_core::{Component, ContextMode, LayerIndex, Provenance, Scenario, StructureMode, Taxonomy};

const WORDS: &[&str] = &[
    "red", "truck", "wet", "road", "lane", "dog", "cone", "bus", "night", "fog", "crossing", "tree",
    "parked", "slow", "\u{e9}t\u{e9}", "caf\u{e9}", "\"quoted\"", "back\\slash", "tab\there",
];

pub fn words(rng: &mut ChaCha8Rng, lo: usize, hi: usize) -> String {
    let n = rng.random_range(lo..=hi);
    (0..n)
        .map(|_| *WORDS.choose(rng).unwrap())
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn component(rng: &mut ChaCha8Rng, k: LayerIndex, group: &str, tax: &Taxonomy) -> Component {
    let category = match tax.categories(k, group) {
        Some(list) => list.choose(rng).unwrap().clone(),
        None => words(rng, 1, 2),
    };
    let mut c = Component::new(category, words(rng, 1, 6));
    if rng.random_bool(0.5) {
        c.position = Some(words(rng, 0, 3));
    }
    if k.allows_motion() && rng.random_bool(0.5) {
        c.motion = Some(words(rng, 1, 3));
    }
    if rng.random_bool(0.2) {
        c.extras.insert("color".into(), words(rng, 1, 1));
    }
    c
}

pub fn structured(rng: &mut ChaCha8Rng, k: LayerIndex, tax: &Taxonomy, max: usize) -> StructuredBody {
    let mut b = StructuredBody::empty(k);
    for &g in k.groups() {
        for _ in 0..rng.random_range(0..=max) {
            let c = component(rng, k, g, tax);
            b.group_mut(g).unwrap().push(c);
        }
    }
    b
}

pub fn scenario(rng: &mut ChaCha8Rng, mode: StructureMode, tax: &Taxonomy) -> Scenario {
    let id = format!("s-{}", rng.random_range(0..100_000u32));
    let bodies = LayerIndex::ALL.map(|k| {
        if mode.is_textual() {
            LayerBody::Text(words(rng, 0, 12))
        } else {
            LayerBody::Structured(structured(rng, k, tax, 3))
        }
    });
    let mut s = Scenario::new(id, mode, bodies).unwrap();
    if rng.random_bool(0.3) {
        s.provenance = Some(Provenance {
            source_id: "ref".into(),
            edited_layer: *LayerIndex::ALL.choose(rng).unwrap(),
            strategy: mode,
            context_mode: if rng.random_bool(0.5) { ContextMode::Shared } else { ContextMode::Independent },
            model_id: "m".into(),
            temperature: rng.random_range(0.0..2.0),
            created_at: "1970-01-01T00:00:00Z".into(),
        });
    }
    if rng.random_bool(0.2) {
        s.extras.insert("source".into(), serde_json::json!({"camera": words(rng, 1, 2), "n": 3}));
    }
    s
}

pub fn any_mode(rng: &mut ChaCha8Rng) -> StructureMode {
    *StructureMode::ALL.choose(rng).unwrap()
}
