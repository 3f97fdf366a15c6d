use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde_json::{Map, Value};

use super::template::{CategoryLookup, LayerIndex, Taxonomy};
use super::{Component, LayerBody, Provenance, Scenario, ScenarioError, StructureMode, StructuredBody};

pub(crate) fn layer_path(k: LayerIndex) -> String {
    format!("layers[{}]", k.get())
}

fn component_path(k: LayerIndex, group: &str, i: usize) -> String {
    format!("layers[{}].{}[{}]", k.get(), group, i)
}

/// Reads the mode a document declares, or infers it from the shape of `L1`.
///
/// Text documents without a `"mode"` key are reported as unstructured.
pub fn detect_mode(document: &str) -> Result<StructureMode, ScenarioError> {
    let value: Value = serde_json::from_str(document)
        .map_err(|e| ScenarioError::MalformedDocument(e.to_string()))?;
    let Value::Object(obj) = value else {
        return Err(ScenarioError::MalformedDocument(
            "scenario document must be a JSON object".into(),
        ));
    };
    if let Some(m) = obj.get("mode") {
        return m
            .as_str()
            .and_then(StructureMode::parse)
            .ok_or_else(|| ScenarioError::violation("mode", format!("unknown mode {m}")));
    }
    match obj.get("L1") {
        Some(Value::String(_)) => Ok(StructureMode::Unstructured),
        Some(Value::Object(_)) | Some(Value::Array(_)) => Ok(StructureMode::Hard),
        _ => Err(ScenarioError::violation(
            layer_path(LayerIndex::L1),
            "missing layer",
        )),
    }
}

/// Parses and validates one scenario document.
pub fn parse_scenario(
    document: &str,
    mode: StructureMode,
    taxonomy: &Taxonomy,
) -> Result<Scenario, ScenarioError> {
    let value: Value = serde_json::from_str(document)
        .map_err(|e| ScenarioError::MalformedDocument(e.to_string()))?;
    let Value::Object(obj) = value else {
        return Err(ScenarioError::MalformedDocument(
            "scenario document must be a JSON object".into(),
        ));
    };

    let mut id = String::new();
    let mut provenance = None;
    let mut extras = BTreeMap::new();
    let mut raw_layers: [Option<Value>; 5] = Default::default();

    for (key, v) in obj {
        match key.as_str() {
            "id" => match v {
                Value::String(s) => id = s,
                other => {
                    return Err(ScenarioError::violation(
                        "id",
                        format!("expected a string, found {other}"),
                    ))
                }
            },
            "mode" => {
                let declared = v.as_str().and_then(StructureMode::parse);
                if declared != Some(mode) {
                    return Err(ScenarioError::violation(
                        "mode",
                        format!("document declares {v}, expected \"{mode}\""),
                    ));
                }
            }
            "provenance" => provenance = Some(parse_provenance(v)?),
            k if is_layer_key(k) => match LayerIndex::parse(k) {
                Some(idx) => raw_layers[idx.slot()] = Some(v),
                None => {
                    return Err(ScenarioError::violation(
                        format!("layers[{}]", &k[1..]),
                        "a scenario has exactly five layers L1..L5",
                    ))
                }
            },
            _ => {
                extras.insert(key, v);
            }
        }
    }

    let mut bodies: Vec<LayerBody> = Vec::with_capacity(5);
    for k in LayerIndex::ALL {
        let raw = raw_layers[k.slot()]
            .take()
            .ok_or_else(|| ScenarioError::violation(layer_path(k), "missing layer"))?;
        bodies.push(parse_layer(k, raw, mode, taxonomy)?);
    }
    let bodies: [LayerBody; 5] = bodies.try_into().expect("five layers");

    let mut s = Scenario::new(id, mode, bodies)?;
    s.provenance = provenance;
    s.extras = extras;
    Ok(s)
}

fn is_layer_key(k: &str) -> bool {
    k.len() >= 2 && k.starts_with('L') && k[1..].bytes().all(|b| b.is_ascii_digit())
}

fn parse_provenance(v: Value) -> Result<Provenance, ScenarioError> {
    let p: Provenance = serde_json::from_value(v)
        .map_err(|e| ScenarioError::violation("provenance", e.to_string()))?;
    if !p.temperature.is_finite() {
        return Err(ScenarioError::violation(
            "provenance.temperature",
            "must be finite",
        ));
    }
    Ok(p)
}

fn parse_layer(
    k: LayerIndex,
    raw: Value,
    mode: StructureMode,
    taxonomy: &Taxonomy,
) -> Result<LayerBody, ScenarioError> {
    if mode.is_textual() {
        return match raw {
            Value::String(s) => Ok(LayerBody::Text(s)),
            other => Err(ScenarioError::violation(
                layer_path(k),
                format!("{mode} layers are text, found {}", kind(&other)),
            )),
        };
    }

    let mut body = StructuredBody::empty(k);
    let groups: Map<String, Value> = match raw {
        Value::Object(m) => m,
        // `[]` is an empty layer; a non-empty array is shorthand for the only
        // group of a single-group layer.
        Value::Array(items) if items.is_empty() => Map::new(),
        Value::Array(items) if k.groups().len() == 1 => {
            let mut m = Map::new();
            m.insert(k.groups()[0].to_string(), Value::Array(items));
            m
        }
        other => {
            return Err(ScenarioError::violation(
                layer_path(k),
                format!("hard layers are objects of component groups, found {}", kind(&other)),
            ))
        }
    };

    for (group, items) in groups {
        let Some(slot) = body.group_mut(&group) else {
            return Err(ScenarioError::violation(
                format!("{}.{}", layer_path(k), group),
                format!(
                    "group not declared for {k}; expected one of {:?}",
                    k.groups()
                ),
            ));
        };
        let items = match items {
            Value::Array(items) => items,
            Value::Null => Vec::new(),
            other => {
                return Err(ScenarioError::violation(
                    format!("{}.{}", layer_path(k), group),
                    format!("expected an array of components, found {}", kind(&other)),
                ))
            }
        };
        for (i, item) in items.into_iter().enumerate() {
            let c = parse_component(k, &group, i, item, taxonomy)?;
            slot.push(c);
        }
    }
    Ok(LayerBody::Structured(body))
}

fn parse_component(
    k: LayerIndex,
    group: &str,
    i: usize,
    raw: Value,
    taxonomy: &Taxonomy,
) -> Result<Component, ScenarioError> {
    let path = component_path(k, group, i);
    let Value::Object(fields) = raw else {
        return Err(ScenarioError::violation(
            path,
            format!("expected a component object, found {}", kind(&raw)),
        ));
    };
    let mut c = Component::default();
    let mut saw_type = false;
    let mut saw_characteristics = false;
    for (key, v) in fields {
        let field_path = || format!("{path}.{key}");
        match key.as_str() {
            "type" => {
                c.category = expect_string(v, || format!("{path}.category"))?;
                saw_type = true;
            }
            "characteristics" => {
                c.characteristics = expect_string(v, field_path)?;
                saw_characteristics = true;
            }
            "position" => c.position = optional_string(v, field_path)?,
            "motion" => c.motion = optional_string(v, field_path)?,
            _ => {
                let text = match v {
                    Value::String(s) => s,
                    Value::Number(n) => n.to_string(),
                    Value::Bool(b) => b.to_string(),
                    other => {
                        return Err(ScenarioError::violation(
                            field_path(),
                            format!("extra fields must be scalar, found {}", kind(&other)),
                        ))
                    }
                };
                c.extras.insert(key, text);
            }
        }
    }
    if !saw_type {
        return Err(ScenarioError::violation(
            format!("{path}.category"),
            "missing \"type\"",
        ));
    }
    if !saw_characteristics {
        return Err(ScenarioError::violation(
            format!("{path}.characteristics"),
            "missing \"characteristics\"",
        ));
    }
    if let CategoryLookup::Match { canonical, .. } = taxonomy.lookup(k, group, &c.category) {
        c.category = canonical.to_string();
    }
    check_component(k, group, i, &c, taxonomy)?;
    Ok(c)
}

/// Template and taxonomy rules for one hard-mode component.
pub(crate) fn check_component(
    k: LayerIndex,
    group: &str,
    i: usize,
    c: &Component,
    taxonomy: &Taxonomy,
) -> Result<(), ScenarioError> {
    let path = component_path(k, group, i);
    match taxonomy.lookup(k, group, &c.category) {
        CategoryLookup::Unknown => {
            let allowed = taxonomy.categories(k, group).unwrap_or(&[]);
            return Err(ScenarioError::violation(
                format!("{path}.category"),
                format!("{:?} is not one of {:?}", c.category, allowed),
            ));
        }
        CategoryLookup::NotApplicable if c.category.trim().is_empty() => {
            return Err(ScenarioError::violation(
                format!("{path}.category"),
                "category is empty",
            ));
        }
        _ => {}
    }
    if c.characteristics.trim().is_empty() {
        return Err(ScenarioError::violation(
            format!("{path}.characteristics"),
            "characteristics must be non-empty",
        ));
    }
    if c.motion.is_some() && !k.allows_motion() {
        return Err(ScenarioError::violation(
            format!("{path}.motion"),
            format!("motion is only permitted in {}", LayerIndex::L4),
        ));
    }
    Ok(())
}

fn expect_string(v: Value, path: impl FnOnce() -> String) -> Result<String, ScenarioError> {
    match v {
        Value::String(s) => Ok(s),
        other => Err(ScenarioError::violation(
            path(),
            format!("expected a string, found {}", kind(&other)),
        )),
    }
}

fn optional_string(
    v: Value,
    path: impl FnOnce() -> String,
) -> Result<Option<String>, ScenarioError> {
    match v {
        Value::Null => Ok(None),
        other => expect_string(other, path).map(Some),
    }
}

fn kind(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "a boolean",
        Value::Number(_) => "a number",
        Value::String(_) => "a string",
        Value::Array(_) => "an array",
        Value::Object(_) => "an object",
    }
}
