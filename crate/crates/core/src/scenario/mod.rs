//! The five-layer scenario representation.
//!
//! A [`Scenario`] always holds exactly five layers. In unstructured and soft
//! mode every layer is free text; in hard mode every layer is a
//! [`StructuredBody`] of component groups fixed by the layer template.

mod parse;
mod serialize;
mod template;
mod text;

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

pub use parse::{detect_mode, parse_scenario};
pub use serialize::serialize_scenario;
pub use template::{
    CategoryLookup, LayerIndex, Taxonomy, DEFAULT_OBJECT_CATEGORIES, LAYER_GROUPS,
};
pub use text::{concat_layers, diff_layers, layer_text, normalize_whitespace, LAYER_SEPARATOR};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScenarioError {
    #[error("malformed document: {0}")]
    MalformedDocument(String),
    #[error("schema violation at {path}: {message}")]
    SchemaViolation { path: String, message: String },
    #[error("mode mismatch: {left} vs {right}")]
    ModeMismatch {
        left: StructureMode,
        right: StructureMode,
    },
    #[error("invalid taxonomy: {0}")]
    InvalidTaxonomy(String),
}

impl ScenarioError {
    pub(crate) fn violation(path: impl Into<String>, message: impl Into<String>) -> Self {
        ScenarioError::SchemaViolation {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Offending path for schema violations.
    pub fn path(&self) -> Option<&str> {
        match self {
            ScenarioError::SchemaViolation { path, .. } => Some(path),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StructureMode {
    Unstructured,
    Soft,
    Hard,
}

impl StructureMode {
    pub const ALL: [StructureMode; 3] = [Self::Unstructured, Self::Soft, Self::Hard];

    pub fn as_str(self) -> &'static str {
        match self {
            StructureMode::Unstructured => "unstructured",
            StructureMode::Soft => "soft",
            StructureMode::Hard => "hard",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.as_str() == s)
    }

    pub fn is_textual(self) -> bool {
        !matches!(self, StructureMode::Hard)
    }
}

impl fmt::Display for StructureMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Whether variants come from separate conversations or one shared one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContextMode {
    Independent,
    Shared,
}

impl ContextMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ContextMode::Independent => "independent",
            ContextMode::Shared => "shared",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "independent" => Some(ContextMode::Independent),
            "shared" => Some(ContextMode::Shared),
            _ => None,
        }
    }
}

impl fmt::Display for ContextMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Where a generated scenario came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub source_id: String,
    pub edited_layer: LayerIndex,
    pub strategy: StructureMode,
    pub context_mode: ContextMode,
    pub model_id: String,
    pub temperature: f64,
    /// RFC 3339 timestamp.
    pub created_at: String,
}

/// One typed object inside a structured layer.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Component {
    /// Serialized as `"type"`.
    pub category: String,
    pub characteristics: String,
    pub position: Option<String>,
    pub motion: Option<String>,
    pub extras: BTreeMap<String, String>,
}

impl Component {
    pub fn new(category: impl Into<String>, characteristics: impl Into<String>) -> Self {
        Component {
            category: category.into(),
            characteristics: characteristics.into(),
            ..Default::default()
        }
    }

    pub fn with_position(mut self, position: impl Into<String>) -> Self {
        self.position = Some(position.into());
        self
    }

    pub fn with_motion(mut self, motion: impl Into<String>) -> Self {
        self.motion = Some(motion.into());
        self
    }
}

/// Component groups of one hard-mode layer.
///
/// Always holds every group the template declares for its layer, in template
/// order, so two bodies with the same components compare equal regardless of
/// how the document spelled empty groups.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructuredBody {
    groups: Vec<(String, Vec<Component>)>,
}

impl StructuredBody {
    pub fn empty(layer: LayerIndex) -> Self {
        StructuredBody {
            groups: layer
                .groups()
                .iter()
                .map(|g| (String::from(*g), Vec::new()))
                .collect(),
        }
    }

    pub fn group(&self, name: &str) -> Option<&[Component]> {
        self.groups
            .iter()
            .find(|(g, _)| g == name)
            .map(|(_, c)| c.as_slice())
    }

    pub fn group_mut(&mut self, name: &str) -> Option<&mut Vec<Component>> {
        self.groups
            .iter_mut()
            .find(|(g, _)| g == name)
            .map(|(_, c)| c)
    }

    pub fn groups(&self) -> impl Iterator<Item = (&str, &[Component])> {
        self.groups.iter().map(|(g, c)| (g.as_str(), c.as_slice()))
    }

    pub fn component_count(&self) -> usize {
        self.groups.iter().map(|(_, c)| c.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.component_count() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LayerBody {
    Text(String),
    Structured(StructuredBody),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layer {
    index: LayerIndex,
    body: LayerBody,
}

impl Layer {
    pub fn index(&self) -> LayerIndex {
        self.index
    }

    pub fn body(&self) -> &LayerBody {
        &self.body
    }

    pub fn text(&self) -> Option<&str> {
        match &self.body {
            LayerBody::Text(t) => Some(t),
            LayerBody::Structured(_) => None,
        }
    }

    pub fn structured(&self) -> Option<&StructuredBody> {
        match &self.body {
            LayerBody::Structured(b) => Some(b),
            LayerBody::Text(_) => None,
        }
    }
}

fn check_conforms(k: LayerIndex, mode: StructureMode, body: &LayerBody) -> Result<(), ScenarioError> {
    let ok = match (body, mode.is_textual()) {
        (LayerBody::Text(_), true) => true,
        (LayerBody::Structured(b), false) => b.groups().map(|(g, _)| g).eq(k.groups().iter().copied()),
        _ => false,
    };
    if ok {
        Ok(())
    } else {
        Err(ScenarioError::violation(
            parse::layer_path(k),
            alloc::format!("layer body does not conform to {mode} mode"),
        ))
    }
}

/// One driving scene.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub id: String,
    mode: StructureMode,
    layers: [Layer; 5],
    pub provenance: Option<Provenance>,
    /// Unknown top-level document fields, kept for re-serialization.
    pub extras: BTreeMap<String, Value>,
}

impl Scenario {
    /// Builds a scenario, checking that every body matches `mode`.
    ///
    /// Taxonomy constraints are checked by [`Scenario::validate`] and at parse
    /// time.
    pub fn new(
        id: impl Into<String>,
        mode: StructureMode,
        bodies: [LayerBody; 5],
    ) -> Result<Self, ScenarioError> {
        let mut bodies = bodies.into_iter();
        let layers = LayerIndex::ALL.map(|index| Layer {
            index,
            body: bodies.next().expect("five bodies"),
        });
        for layer in &layers {
            check_conforms(layer.index, mode, &layer.body)?;
        }
        Ok(Scenario {
            id: id.into(),
            mode,
            layers,
            provenance: None,
            extras: BTreeMap::new(),
        })
    }

    /// Five text layers.
    pub fn from_texts(
        id: impl Into<String>,
        mode: StructureMode,
        texts: [&str; 5],
    ) -> Result<Self, ScenarioError> {
        Scenario::new(id, mode, texts.map(|t| LayerBody::Text(t.into())))
    }

    pub fn mode(&self) -> StructureMode {
        self.mode
    }

    pub fn layers(&self) -> &[Layer; 5] {
        &self.layers
    }

    pub fn layer(&self, k: LayerIndex) -> &Layer {
        &self.layers[k.slot()]
    }

    /// Replaces one layer body; it must match the scenario's mode.
    pub fn set_layer(&mut self, k: LayerIndex, body: LayerBody) -> Result<(), ScenarioError> {
        check_conforms(k, self.mode, &body)?;
        self.layers[k.slot()].body = body;
        Ok(())
    }

    /// Components of one hard-mode group, or `None` in text modes or for an
    /// undeclared group.
    pub fn components(&self, k: LayerIndex, group: &str) -> Option<&[Component]> {
        self.layer(k).structured().and_then(|b| b.group(group))
    }

    /// Checks every hard-mode component against the template and taxonomy.
    pub fn validate(&self, taxonomy: &Taxonomy) -> Result<(), ScenarioError> {
        if let Some(p) = &self.provenance {
            if !p.temperature.is_finite() {
                return Err(ScenarioError::violation(
                    "provenance.temperature",
                    "must be finite",
                ));
            }
        }
        for layer in &self.layers {
            let Some(body) = layer.structured() else {
                continue;
            };
            for (group, comps) in body.groups() {
                for (i, c) in comps.iter().enumerate() {
                    parse::check_component(layer.index, group, i, c, taxonomy)?;
                }
            }
        }
        Ok(())
    }

    /// Converts a hard scenario to a text mode by flattening every layer.
    pub fn flattened(&self, mode: StructureMode) -> Scenario {
        assert!(mode.is_textual(), "flattened target must be a text mode");
        let layers = LayerIndex::ALL.map(|k| Layer {
            index: k,
            body: LayerBody::Text(layer_text(self, k)),
        });
        Scenario {
            id: self.id.clone(),
            mode,
            layers,
            provenance: self.provenance.clone(),
            extras: self.extras.clone(),
        }
    }
}
