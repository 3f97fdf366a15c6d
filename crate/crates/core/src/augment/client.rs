//! Chat-completion clients.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use super::prompt::{PAYLOAD_CLOSE, PAYLOAD_OPEN, REPAIR_MARKER, SCENARIO_SENTINEL};
use crate::embedding::fnv1a;
use crate::scenario::{
    parse_scenario, serialize_scenario, LayerBody, LayerIndex, Scenario, StructureMode, Taxonomy,
};
use crate::Component;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ClientError {
    #[error("chat client unavailable: {0}")]
    ClientUnavailable(String),
}

/// One chat completion call.
#[derive(Debug, Clone, PartialEq)]
pub struct ChatRequest {
    pub system: String,
    pub user: String,
    pub temperature: f64,
    pub response_schema: Option<Value>,
    pub seed: u64,
}

pub trait ChatClient: Sync {
    fn model_id(&self) -> &str;

    /// Whether `response_schema` is enforced by the backend.
    fn supports_schema_enforcement(&self) -> bool;

    fn complete(&self, request: &ChatRequest) -> Result<String, ClientError>;
}

impl<C: ChatClient + ?Sized> ChatClient for &C {
    fn model_id(&self) -> &str {
        (**self).model_id()
    }

    fn supports_schema_enforcement(&self) -> bool {
        (**self).supports_schema_enforcement()
    }

    fn complete(&self, request: &ChatRequest) -> Result<String, ClientError> {
        (**self).complete(request)
    }
}

/// Injected misbehaviour of [`MockClient`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MockFaults {
    /// Replies that are not JSON while fewer repair notes than this are in
    /// the prompt.
    pub malformed_replies: usize,
    /// Further replies that are JSON but fail validation.
    pub invalid_replies: usize,
    /// Every reply fails validation.
    pub always_invalid: bool,
    /// Also edit one layer besides the target.
    pub touch_other_layer: bool,
    /// Return the input unchanged.
    pub noop: bool,
}

pub const MOCK_MODEL_ID: &str = "mock-editor";

/// Offline deterministic client that performs plausible single-layer edits.
///
/// Replies depend only on the request, so the client is stateless.
#[derive(Debug, Clone)]
pub struct MockClient {
    pub seed: u64,
    pub taxonomy: Taxonomy,
    pub faults: MockFaults,
}

impl Default for MockClient {
    fn default() -> Self {
        MockClient::new(0)
    }
}

const TEXT_EDITS: [&[&str]; 5] = [
    &[
        "The lane markings suddenly end and the road narrows to a single gravel track.",
        "A traffic light ahead is flashing red and green at the same time.",
        "The road surface is covered in fresh tar that has not yet set.",
        "A stop sign has been turned to face the wrong direction.",
        "The lane splits without warning around a concrete pillar.",
    ],
    &[
        "A tall billboard screen flashes bright images that look like traffic lights.",
        "Dense hedges overhang the sidewalk and hide the crossing.",
        "A mirrored building facade reflects the oncoming traffic.",
        "Scaffolding covers the facade and reaches over the curb.",
        "A row of parked food carts blocks the view of the side street.",
    ],
    &[
        "Roadworks have closed the right lane with orange barrels.",
        "A burst water main has flooded the intersection.",
        "Fallen branches lie across half of the road.",
        "A temporary detour sign points into oncoming traffic.",
        "Fresh paint marks a diverted lane over the old markings.",
    ],
    &[
        "A horse-drawn carriage moves slowly in the lane ahead.",
        "A child on roller skates crosses between the parked cars.",
        "A mattress falls off the roof of the car in front.",
        "A kangaroo hops across the road from the left.",
        "A delivery robot stops in the middle of the crosswalk.",
        "A motorcyclist rides the wrong way along the shoulder.",
    ],
    &[
        "A sudden hailstorm reduces visibility to a few meters.",
        "Low sun glare shines directly into the camera.",
        "Thick fog rolls in from the side of the road.",
        "A partial solar eclipse darkens the sky at noon.",
        "Strong gusts of wind blow sand across the road.",
    ],
];

const CHARACTERISTICS: &[&str] = &[
    "unusually large and painted bright orange",
    "partially covered by a tarp flapping in the wind",
    "moving erratically with its hazard lights on",
    "old and rusty with a missing headlight",
    "decorated with reflective stickers",
    "carrying a load that sticks out far to the side",
];

const POSITIONS: &[&str] = &[
    "ahead in the ego lane",
    "on the right shoulder",
    "crossing from the left",
    "directly behind the ego vehicle",
    "in the opposite lane",
];

const MOTIONS: &[&str] = &[
    "suddenly brakes to a stop",
    "reverses towards the ego vehicle",
    "swerves across all lanes",
    "moves against the direction of traffic",
    "stops and starts repeatedly",
];

const FREE_CATEGORIES: &[&str] = &["barrier", "debris", "construction", "flooding", "detour"];

const NEXT_SCENARIO: &str = "{\"id\": \"broken\", \"L1\":";

impl MockClient {
    pub fn new(seed: u64) -> Self {
        MockClient {
            seed,
            taxonomy: Taxonomy::default(),
            faults: MockFaults::default(),
        }
    }

    pub fn with_faults(mut self, faults: MockFaults) -> Self {
        self.faults = faults;
        self
    }

    fn reply(&self, request: &ChatRequest) -> Result<String, String> {
        let user = &request.user;
        let header = |key: &str| -> Option<&str> {
            user.lines()
                .find_map(|l| l.strip_prefix(key))
                .map(str::trim)
        };
        let target = header("TARGET LAYER:")
            .and_then(LayerIndex::parse)
            .ok_or("no target layer")?;
        let mode = header("STRUCTURE:")
            .and_then(StructureMode::parse)
            .ok_or("no structure mode")?;
        let variants: usize = header("VARIANTS:")
            .and_then(|v| v.parse().ok())
            .ok_or("no variant count")?;
        let start = user.find(PAYLOAD_OPEN).ok_or("no payload")? + PAYLOAD_OPEN.len();
        let end = user.rfind(PAYLOAD_CLOSE).ok_or("no payload end")?;
        let source = parse_scenario(user[start..end].trim(), mode, &self.taxonomy)
            .map_err(|e| e.to_string())?;

        let repairs = user.matches(REPAIR_MARKER).count();
        if repairs < self.faults.malformed_replies {
            return Ok(NEXT_SCENARIO.to_string());
        }
        let invalid = self.faults.always_invalid
            || repairs < self.faults.malformed_replies + self.faults.invalid_replies;

        let mut rng = ChaCha8Rng::seed_from_u64(
            self.seed ^ request.seed.rotate_left(17) ^ fnv1a(user.as_bytes()),
        );
        let mut docs = Vec::with_capacity(variants);
        for _ in 0..variants {
            let mut s = source.clone();
            if !self.faults.noop {
                self.edit(&mut s, target, &mut rng);
            }
            if self.faults.touch_other_layer {
                let others: Vec<LayerIndex> =
                    LayerIndex::ALL.into_iter().filter(|&k| k != target).collect();
                let k = *others.choose(&mut rng).expect("four layers");
                self.edit(&mut s, k, &mut rng);
            }
            let mut doc = serialize_scenario(&s);
            if invalid {
                doc = break_document(&doc, mode);
            }
            docs.push(doc);
        }
        Ok(docs.join(&format!("{SCENARIO_SENTINEL}\n")))
    }

    fn edit(&self, s: &mut Scenario, k: LayerIndex, rng: &mut ChaCha8Rng) {
        let body = match s.layer(k).body() {
            LayerBody::Text(t) => {
                let phrase = TEXT_EDITS[k.slot()].choose(rng).expect("non-empty");
                let tag: u16 = rng.random_range(1..1000);
                let sep = if t.trim().is_empty() { "" } else { " " };
                LayerBody::Text(format!("{}{sep}{phrase} (case {tag})", t.trim_end()))
            }
            LayerBody::Structured(b) => {
                let mut b = b.clone();
                let group = *k.groups().choose(rng).expect("every layer has a group");
                let category = match self.taxonomy.categories(k, group) {
                    Some(list) => list.choose(rng).expect("non-empty").clone(),
                    None => FREE_CATEGORIES.choose(rng).expect("non-empty").to_string(),
                };
                let mut c = Component::new(category, *CHARACTERISTICS.choose(rng).expect("non-empty"))
                    .with_position(*POSITIONS.choose(rng).expect("non-empty"));
                if k.allows_motion() {
                    c = c.with_motion(*MOTIONS.choose(rng).expect("non-empty"));
                }
                b.group_mut(group).expect("declared group").push(c);
                LayerBody::Structured(b)
            }
        };
        s.set_layer(k, body).expect("body keeps the scenario mode");
    }
}

/// Makes a serialized document fail validation.
fn break_document(doc: &str, mode: StructureMode) -> String {
    let mut v: Value = serde_json::from_str(doc).expect("serializer output is JSON");
    if let Value::Object(obj) = &mut v {
        if mode == StructureMode::Hard {
            obj.insert(
                "L4".into(),
                serde_json::json!({"objects": [{"type": "spaceship", "characteristics": ""}]}),
            );
        } else {
            obj.remove("L5");
        }
    }
    serde_json::to_string_pretty(&v).unwrap_or_default()
}

impl ChatClient for MockClient {
    fn model_id(&self) -> &str {
        MOCK_MODEL_ID
    }

    fn supports_schema_enforcement(&self) -> bool {
        false
    }

    fn complete(&self, request: &ChatRequest) -> Result<String, ClientError> {
        // An unreadable prompt gets an unusable answer, like a real model.
        Ok(self
            .reply(request)
            .unwrap_or_else(|e| format!("I cannot edit this scenario: {e}")))
    }
}
