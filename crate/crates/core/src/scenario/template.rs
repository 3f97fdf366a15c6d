//! Layer indices, the hard-mode layer template, and category taxonomies.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::ScenarioError;

/// One of the five layers, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct LayerIndex(u8);

impl LayerIndex {
    pub const L1: LayerIndex = LayerIndex(1);
    pub const L2: LayerIndex = LayerIndex(2);
    pub const L3: LayerIndex = LayerIndex(3);
    pub const L4: LayerIndex = LayerIndex(4);
    pub const L5: LayerIndex = LayerIndex(5);

    pub const ALL: [LayerIndex; 5] = [Self::L1, Self::L2, Self::L3, Self::L4, Self::L5];

    pub const fn new(k: u8) -> Option<Self> {
        if k >= 1 && k <= 5 {
            Some(LayerIndex(k))
        } else {
            None
        }
    }

    pub const fn get(self) -> u8 {
        self.0
    }

    /// Zero-based position, for array indexing.
    pub const fn slot(self) -> usize {
        (self.0 - 1) as usize
    }

    /// Document key, `"L1"` .. `"L5"`.
    pub fn key(self) -> String {
        format!("L{}", self.0)
    }

    /// Parses `"L4"` or `"4"`.
    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim();
        let digits = s.strip_prefix('L').or_else(|| s.strip_prefix('l')).unwrap_or(s);
        digits.parse::<u8>().ok().and_then(Self::new)
    }

    /// Human name of the layer's content.
    pub fn title(self) -> &'static str {
        match self.0 {
            1 => "road structures",
            2 => "structures surrounding the road",
            3 => "temporary changes to road and surroundings",
            4 => "dynamic objects",
            _ => "environmental conditions",
        }
    }

    /// Component groups declared for this layer, in template order.
    pub fn groups(self) -> &'static [&'static str] {
        LAYER_GROUPS[self.slot()]
    }

    pub fn declares_group(self, group: &str) -> bool {
        self.groups().contains(&group)
    }

    /// Only dynamic objects carry motion.
    pub fn allows_motion(self) -> bool {
        self.0 == 4
    }
}

impl TryFrom<u8> for LayerIndex {
    type Error = String;

    fn try_from(k: u8) -> Result<Self, Self::Error> {
        LayerIndex::new(k).ok_or_else(|| format!("layer index {k} outside 1..5"))
    }
}

impl From<LayerIndex> for u8 {
    fn from(k: LayerIndex) -> u8 {
        k.0
    }
}

impl fmt::Display for LayerIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "L{}", self.0)
    }
}

/// Hard-mode group names per layer.
pub const LAYER_GROUPS: [&[&str]; 5] = [
    &["roads", "guidance"],
    &["environment", "structures"],
    &["objects"],
    &["objects"],
    &["weather", "illumination"],
];

/// Default dynamic-object categories.
pub const DEFAULT_OBJECT_CATEGORIES: [&str; 6] =
    ["vehicle", "cyclist", "pedestrian", "animal", "inanimate object", "other"];

/// Result of looking a raw category up in a taxonomy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CategoryLookup<'a> {
    /// No closed list exists for this (layer, group); any category string is accepted.
    NotApplicable,
    /// Canonical spelling of the matched entry and its position in the list.
    Match { canonical: &'a str, position: usize },
    Unknown,
}

/// Closed category lists per (layer, group).
///
/// Layer 3 has no default list: temporary changes are free text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Taxonomy {
    entries: BTreeMap<(LayerIndex, String), Vec<String>>,
}

pub(crate) fn normalize_category(raw: &str) -> String {
    raw.trim().to_lowercase()
}

impl Taxonomy {
    /// An empty taxonomy; every lookup is not applicable.
    pub fn empty() -> Self {
        Taxonomy {
            entries: BTreeMap::new(),
        }
    }

    /// Inserts or replaces the list for one `(layer, group)`.
    pub fn set(
        &mut self,
        layer: LayerIndex,
        group: &str,
        categories: Vec<String>,
    ) -> Result<(), ScenarioError> {
        if !layer.declares_group(group) {
            return Err(ScenarioError::InvalidTaxonomy(format!(
                "group {group:?} is not declared for layer {layer}"
            )));
        }
        if categories.is_empty() {
            return Err(ScenarioError::InvalidTaxonomy(format!(
                "{layer}.{group}: category list is empty"
            )));
        }
        let mut seen = Vec::with_capacity(categories.len());
        for c in &categories {
            let n = normalize_category(c);
            if n.is_empty() {
                return Err(ScenarioError::InvalidTaxonomy(format!(
                    "{layer}.{group}: blank category"
                )));
            }
            if seen.contains(&n) {
                return Err(ScenarioError::InvalidTaxonomy(format!(
                    "{layer}.{group}: duplicate category {c:?}"
                )));
            }
            seen.push(n);
        }
        let categories = categories.iter().map(|c| c.trim().to_string()).collect();
        self.entries.insert((layer, group.to_string()), categories);
        Ok(())
    }

    pub fn categories(&self, layer: LayerIndex, group: &str) -> Option<&[String]> {
        self.entries
            .get(&(layer, group.to_string()))
            .map(Vec::as_slice)
    }

    /// Case-insensitive, whitespace-trimmed lookup.
    pub fn lookup(&self, layer: LayerIndex, group: &str, raw: &str) -> CategoryLookup<'_> {
        let Some(list) = self.categories(layer, group) else {
            return CategoryLookup::NotApplicable;
        };
        let needle = normalize_category(raw);
        list.iter()
            .position(|c| normalize_category(c) == needle)
            .map(|position| CategoryLookup::Match {
                canonical: list[position].as_str(),
                position,
            })
            .unwrap_or(CategoryLookup::Unknown)
    }

    /// `(layer, group)` pairs that have a closed list, in layer then template order.
    pub fn applicable(&self) -> Vec<(LayerIndex, &'static str)> {
        LayerIndex::ALL
            .iter()
            .flat_map(|&k| k.groups().iter().map(move |&g| (k, g)))
            .filter(|(k, g)| self.categories(*k, g).is_some())
            .collect()
    }

    /// Parses the taxonomy file format: `{"L4": {"objects": ["vehicle", ...]}, ...}`.
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let value: Value = serde_json::from_str(text)
            .map_err(|e| ScenarioError::InvalidTaxonomy(format!("not valid JSON: {e}")))?;
        let Value::Object(layers) = value else {
            return Err(ScenarioError::InvalidTaxonomy("expected a JSON object".into()));
        };
        let mut tax = Taxonomy::empty();
        for (key, groups) in layers {
            let layer = LayerIndex::parse(&key).ok_or_else(|| {
                ScenarioError::InvalidTaxonomy(format!("unknown layer key {key:?}"))
            })?;
            let Value::Object(groups) = groups else {
                return Err(ScenarioError::InvalidTaxonomy(format!(
                    "{key}: expected an object of group lists"
                )));
            };
            for (group, list) in groups {
                let Value::Array(items) = list else {
                    return Err(ScenarioError::InvalidTaxonomy(format!(
                        "{key}.{group}: expected an array"
                    )));
                };
                let cats = items
                    .into_iter()
                    .map(|v| match v {
                        Value::String(s) => Ok(s),
                        other => Err(ScenarioError::InvalidTaxonomy(format!(
                            "{key}.{group}: category {other} is not a string"
                        ))),
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                tax.set(layer, &group, cats)?;
            }
        }
        Ok(tax)
    }

    pub fn to_json(&self) -> String {
        let mut root = Map::new();
        for k in LayerIndex::ALL {
            let mut groups = Map::new();
            for &g in k.groups() {
                if let Some(list) = self.categories(k, g) {
                    groups.insert(
                        g.to_string(),
                        Value::Array(list.iter().cloned().map(Value::String).collect()),
                    );
                }
            }
            if !groups.is_empty() {
                root.insert(k.key(), Value::Object(groups));
            }
        }
        serde_json::to_string_pretty(&Value::Object(root)).unwrap_or_default()
    }
}

impl Default for Taxonomy {
    /// Ships closed lists for L1, L2, L4 and L5. The L4 list is the six
    /// dynamic-object categories; the others are configurable placeholders.
    fn default() -> Self {
        let lists: [(LayerIndex, &str, &[&str]); 7] = [
            (
                LayerIndex::L1,
                "roads",
                &[
                    "urban road",
                    "highway",
                    "rural road",
                    "intersection",
                    "roundabout",
                    "parking area",
                    "bridge",
                    "tunnel",
                    "other",
                ],
            ),
            (
                LayerIndex::L1,
                "guidance",
                &[
                    "lane marking",
                    "traffic light",
                    "traffic sign",
                    "crosswalk",
                    "barrier",
                    "other",
                ],
            ),
            (
                LayerIndex::L2,
                "environment",
                &["urban", "suburban", "rural", "industrial", "natural", "other"],
            ),
            (
                LayerIndex::L2,
                "structures",
                &[
                    "building",
                    "vegetation",
                    "sidewalk",
                    "street furniture",
                    "wall or fence",
                    "parking",
                    "other",
                ],
            ),
            (LayerIndex::L4, "objects", &DEFAULT_OBJECT_CATEGORIES),
            (
                LayerIndex::L5,
                "weather",
                &["clear", "cloudy", "rain", "snow", "fog", "wind", "other"],
            ),
            (
                LayerIndex::L5,
                "illumination",
                &[
                    "daylight",
                    "dusk or dawn",
                    "night",
                    "street lighting",
                    "vehicle lights",
                    "glare",
                    "other",
                ],
            ),
        ];
        let mut tax = Taxonomy::empty();
        for (k, g, cats) in lists {
            tax.set(k, g, cats.iter().map(|c| c.to_string()).collect())
                .expect("default taxonomy is well-formed");
        }
        tax
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn default_object_list_is_exact() {
        let tax = Taxonomy::default();
        let objects = tax.categories(LayerIndex::L4, "objects").unwrap();
        assert_eq!(
            objects,
            &["vehicle", "cyclist", "pedestrian", "animal", "inanimate object", "other"]
        );
    }

    #[test]
    fn layer_three_is_free_text() {
        let tax = Taxonomy::default();
        assert_eq!(
            tax.lookup(LayerIndex::L3, "objects", "roadworks"),
            CategoryLookup::NotApplicable
        );
    }

    #[test]
    fn lookup_is_case_and_space_insensitive() {
        let tax = Taxonomy::default();
        assert_eq!(
            tax.lookup(LayerIndex::L4, "objects", "  Inanimate Object "),
            CategoryLookup::Match {
                canonical: "inanimate object",
                position: 4
            }
        );
        assert_eq!(
            tax.lookup(LayerIndex::L4, "objects", "spaceship"),
            CategoryLookup::Unknown
        );
    }

    #[test]
    fn rejects_duplicates_and_undeclared_groups() {
        let mut tax = Taxonomy::empty();
        assert!(tax
            .set(LayerIndex::L4, "objects", vec!["car".into(), "Car".into()])
            .is_err());
        assert!(tax.set(LayerIndex::L4, "roads", vec!["x".into()]).is_err());
        assert!(tax.set(LayerIndex::L4, "objects", vec![]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let tax = Taxonomy::default();
        let back = Taxonomy::from_json(&tax.to_json()).unwrap();
        assert_eq!(tax, back);
    }

    #[test]
    fn layer_index_parsing() {
        assert_eq!(LayerIndex::parse("L4"), Some(LayerIndex::L4));
        assert_eq!(LayerIndex::parse("2"), Some(LayerIndex::L2));
        assert_eq!(LayerIndex::parse("L6"), None);
        assert_eq!(LayerIndex::new(0), None);
    }
}
