//! Edit requests and the prompts sent for them.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde_json::{json, Map, Value};

use super::AugmentError;
use crate::scenario::{serialize_scenario, ContextMode, LayerIndex, Scenario, StructureMode, Taxonomy};

/// Line separating scenario documents in a shared-context reply.
pub const SCENARIO_SENTINEL: &str = "===SCENARIO===";
/// Opens the scenario payload in the user message.
pub const PAYLOAD_OPEN: &str = "<<<SCENARIO";
/// Closes the scenario payload in the user message.
pub const PAYLOAD_CLOSE: &str = "SCENARIO>>>";
/// Prefixes each repair note appended after an invalid reply.
pub const REPAIR_MARKER: &str = "PREVIOUS REPLY WAS INVALID:";

/// Instruction used for unstructured layer edits.
pub const UNSTRUCTURED_TASK: &str = "Please only modify the layer specified in the prompt to generate an Edge Case and change nothing in the other layers (MOST IMPORTANT)";

/// Layer-specific task for dynamic objects.
pub const L4_TASK: &str = "Turn this scenario into an Edge Case by modifying only the layer L4 from the input. You should either: - Modify existing dynamic objects, or add new ones with rare and/or challenging characteristics. Look for object that do not belong in such a scenario. - Modify the motion of existing dynamic objects, or add new objects with unique and challenging motion. You may do both if needed, but focus on either the characteristics or the motion of the objects when generating a scenario.";

// Drafts for the other layers; editable through the task file.
const L1_TASK_DRAFT: &str = "Turn this scenario into an Edge Case by modifying only the layer L1 from the input. Change the road geometry, surface, lane layout or traffic guidance into something rare or challenging for an automated vehicle, while keeping the scene physically plausible.";
const L2_TASK_DRAFT: &str = "Turn this scenario into an Edge Case by modifying only the layer L2 from the input. Change or add structures and surroundings next to the road that are unusual for this kind of scene or that create challenging occlusions.";
const L3_TASK_DRAFT: &str = "Turn this scenario into an Edge Case by modifying only the layer L3 from the input. Introduce temporary changes to the road or its surroundings, such as roadworks, debris, flooding or detours, that are rare and challenging.";
const L5_TASK_DRAFT: &str = "Turn this scenario into an Edge Case by modifying only the layer L5 from the input. Change the weather or illumination into rare or challenging conditions that affect perception, while keeping the scene plausible.";

/// Default system prompt. Reconstructed: states the role, the layer model
/// and what an edge case is.
pub const DEFAULT_SYSTEM_PROMPT: &str = "\
You are an expert in autonomous driving safety who writes driving scenario descriptions.

Scenarios are described with a five-layer model:
- L1: road structures (road type, geometry, surface, lanes, markings, traffic lights and signs).
- L2: structures surrounding the road (buildings, vegetation, sidewalks, street furniture).
- L3: temporary changes to L1 and L2 (roadworks, debris, closures, flooding).
- L4: dynamic objects (vehicles, cyclists, pedestrians, animals, other moving or movable objects) with their position and motion.
- L5: environmental conditions (weather and illumination).

An Edge Case is a scenario that is rare or unexpected compared with everyday driving, \
for example objects, agents or behaviours that would not normally appear in such a scene. \
You receive a real scenario and edit it into an Edge Case. Keep the scenario plausible \
and keep every layer you are not asked to edit exactly as it is.";

/// Per-layer task texts for soft and hard edits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskSet {
    tasks: BTreeMap<LayerIndex, String>,
}

impl TaskSet {
    pub fn empty() -> Self {
        TaskSet {
            tasks: BTreeMap::new(),
        }
    }

    pub fn get(&self, k: LayerIndex) -> Option<&str> {
        self.tasks.get(&k).map(String::as_str)
    }

    pub fn set(&mut self, k: LayerIndex, task: impl Into<String>) {
        self.tasks.insert(k, task.into());
    }

    /// Task file: `{"1": "...", "L4": "..."}`. Keys are layer indices.
    pub fn from_json(text: &str) -> Result<Self, AugmentError> {
        let map: BTreeMap<String, String> = serde_json::from_str(text)
            .map_err(|e| AugmentError::InvalidConfig(format!("task file: {e}")))?;
        let mut set = TaskSet::empty();
        for (key, task) in map {
            let k = LayerIndex::parse(&key)
                .ok_or_else(|| AugmentError::InvalidConfig(format!("task file: bad layer key {key:?}")))?;
            set.set(k, task);
        }
        Ok(set)
    }

    pub fn to_json(&self) -> String {
        let map: BTreeMap<String, &String> =
            self.tasks.iter().map(|(k, v)| (k.get().to_string(), v)).collect();
        serde_json::to_string_pretty(&map).unwrap_or_default()
    }
}

impl Default for TaskSet {
    fn default() -> Self {
        let mut set = TaskSet::empty();
        set.set(LayerIndex::L1, L1_TASK_DRAFT);
        set.set(LayerIndex::L2, L2_TASK_DRAFT);
        set.set(LayerIndex::L3, L3_TASK_DRAFT);
        set.set(LayerIndex::L4, L4_TASK);
        set.set(LayerIndex::L5, L5_TASK_DRAFT);
        set
    }
}

/// Ask for `n_variants` edits of one layer of `source`.
#[derive(Debug, Clone, PartialEq)]
pub struct EditRequest {
    pub source: Scenario,
    pub target_layer: LayerIndex,
    pub structure_mode: StructureMode,
    pub context_mode: ContextMode,
    pub n_variants: usize,
    pub temperature: f64,
}

impl EditRequest {
    pub fn new(source: Scenario, target_layer: LayerIndex, context_mode: ContextMode, n_variants: usize) -> Self {
        EditRequest {
            structure_mode: source.mode(),
            source,
            target_layer,
            context_mode,
            n_variants,
            temperature: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), AugmentError> {
        if self.n_variants == 0 {
            return Err(AugmentError::InvalidRequest("n_variants must be at least 1".into()));
        }
        if self.source.mode() != self.structure_mode {
            return Err(AugmentError::InvalidRequest(format!(
                "source {:?} is {} but the request asks for {}",
                self.source.id,
                self.source.mode(),
                self.structure_mode
            )));
        }
        if !self.temperature.is_finite() || self.temperature < 0.0 {
            return Err(AugmentError::InvalidRequest(format!(
                "temperature {} is not a finite non-negative number",
                self.temperature
            )));
        }
        Ok(())
    }

    /// Documents expected in one reply.
    pub fn documents_per_reply(&self) -> usize {
        match self.context_mode {
            ContextMode::Independent => 1,
            ContextMode::Shared => self.n_variants,
        }
    }
}

/// Everything sent to the model for one conversation.
#[derive(Debug, Clone, PartialEq)]
pub struct PromptBundle {
    pub system: String,
    pub task: String,
    pub scenario_payload: String,
    /// Response schema; always present in hard mode.
    pub schema: Option<Value>,
    pub target_layer: LayerIndex,
    pub structure_mode: StructureMode,
    pub documents: usize,
}

impl PromptBundle {
    /// The user message. With `inline_schema` the schema is written into the
    /// text for clients that cannot enforce it.
    pub fn user_message(&self, inline_schema: bool) -> String {
        let mut out = String::new();
        out.push_str(&format!("TARGET LAYER: {}\n", self.target_layer));
        out.push_str(&format!("STRUCTURE: {}\n", self.structure_mode));
        out.push_str(&format!("VARIANTS: {}\n\n", self.documents));
        out.push_str(&self.task);
        out.push_str("\n\n");
        if self.documents == 1 {
            out.push_str("Reply with the complete edited scenario as a single JSON document with the same keys as the input.\n");
        } else {
            out.push_str(&format!(
                "Reply with exactly {} different complete edited scenarios. Write each as a JSON document with the same keys as the input and put a line containing only {} between consecutive documents.\n",
                self.documents, SCENARIO_SENTINEL
            ));
        }
        if let (true, Some(schema)) = (inline_schema, &self.schema) {
            out.push_str("Every document must follow this JSON schema:\n");
            out.push_str(&serde_json::to_string(schema).unwrap_or_default());
            out.push('\n');
        }
        out.push_str(PAYLOAD_OPEN);
        out.push('\n');
        out.push_str(self.scenario_payload.trim_end());
        out.push('\n');
        out.push_str(PAYLOAD_CLOSE);
        out.push('\n');
        out
    }
}

/// Builds prompts from a system prompt, task texts and a taxonomy.
#[derive(Debug, Clone, PartialEq)]
pub struct PromptBuilder {
    pub system: String,
    pub tasks: TaskSet,
    pub taxonomy: Taxonomy,
}

impl Default for PromptBuilder {
    fn default() -> Self {
        PromptBuilder {
            system: DEFAULT_SYSTEM_PROMPT.to_string(),
            tasks: TaskSet::default(),
            taxonomy: Taxonomy::default(),
        }
    }
}

impl PromptBuilder {
    pub fn build(&self, req: &EditRequest) -> Result<PromptBundle, AugmentError> {
        req.validate()?;
        let k = req.target_layer;
        let task = match req.structure_mode {
            StructureMode::Unstructured => format!("Layer to modify: {k}.\n{UNSTRUCTURED_TASK}"),
            StructureMode::Soft | StructureMode::Hard => self
                .tasks
                .get(k)
                .map(String::from)
                .ok_or(AugmentError::MissingTaskText(k))?,
        };
        let schema = match req.structure_mode {
            StructureMode::Hard => {
                let doc = scenario_schema(&self.taxonomy);
                Some(if req.documents_per_reply() == 1 {
                    doc
                } else {
                    json!({
                        "type": "array",
                        "minItems": req.n_variants,
                        "maxItems": req.n_variants,
                        "items": doc,
                    })
                })
            }
            _ => None,
        };
        let mut payload_source = req.source.clone();
        payload_source.provenance = None;
        Ok(PromptBundle {
            system: self.system.clone(),
            task,
            scenario_payload: serialize_scenario(&payload_source),
            schema,
            target_layer: k,
            structure_mode: req.structure_mode,
            documents: req.documents_per_reply(),
        })
    }
}

/// JSON schema of a hard-mode scenario document under `taxonomy`.
pub fn scenario_schema(taxonomy: &Taxonomy) -> Value {
    let mut layers = Map::new();
    for k in LayerIndex::ALL {
        let mut groups = Map::new();
        for &g in k.groups() {
            let type_schema = match taxonomy.categories(k, g) {
                Some(list) => json!({"type": "string", "enum": list}),
                None => json!({"type": "string"}),
            };
            let mut props = Map::new();
            props.insert("type".into(), type_schema);
            props.insert("characteristics".into(), json!({"type": "string", "minLength": 1}));
            props.insert("position".into(), json!({"type": "string"}));
            if k.allows_motion() {
                props.insert("motion".into(), json!({"type": "string"}));
            }
            groups.insert(
                g.to_string(),
                json!({
                    "type": "array",
                    "items": {
                        "type": "object",
                        "properties": props,
                        "required": ["type", "characteristics"],
                    }
                }),
            );
        }
        let required: Vec<&str> = k.groups().to_vec();
        layers.insert(
            k.key(),
            json!({"type": "object", "properties": groups, "required": required}),
        );
    }
    let mut props = Map::new();
    props.insert("id".into(), json!({"type": "string"}));
    for (key, v) in layers {
        props.insert(key, v);
    }
    json!({
        "type": "object",
        "properties": props,
        "required": ["L1", "L2", "L3", "L4", "L5"],
    })
}
