use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use super::template::LayerIndex;
use super::{Component, LayerBody, Scenario, ScenarioError};

/// Joins layer texts in [`concat_layers`].
pub const LAYER_SEPARATOR: &str = "\n\n";

/// Text of layer `k` as embedded for comparison.
///
/// Text layers are returned verbatim. Hard layers are flattened one component
/// per line as `group: category <U+2014> characteristics (position; motion)`, groups
/// in template order and components in stored order. The parenthesis is
/// omitted when neither position nor motion is set.
pub fn layer_text(s: &Scenario, k: LayerIndex) -> String {
    match s.layer(k).body() {
        LayerBody::Text(t) => t.clone(),
        LayerBody::Structured(body) => {
            let mut lines: Vec<String> = Vec::with_capacity(body.component_count());
            for (group, comps) in body.groups() {
                lines.extend(comps.iter().map(|c| flatten_component(group, c)));
            }
            lines.join("\n")
        }
    }
}

fn flatten_component(group: &str, c: &Component) -> String {
    let mut line = alloc::format!("{group}: {} — {}", c.category, c.characteristics);
    match (&c.position, &c.motion) {
        (Some(p), Some(m)) => line.push_str(&alloc::format!(" ({p}; {m})")),
        (Some(p), None) => line.push_str(&alloc::format!(" ({p})")),
        (None, Some(m)) => line.push_str(&alloc::format!(" (; {m})")),
        (None, None) => {}
    }
    line
}

/// Whole-scene text: the five layer texts joined by [`LAYER_SEPARATOR`].
pub fn concat_layers(s: &Scenario) -> String {
    LayerIndex::ALL
        .iter()
        .map(|&k| layer_text(s, k))
        .collect::<Vec<_>>()
        .join(LAYER_SEPARATOR)
}

/// Collapses whitespace runs to one space and trims the ends.
pub fn normalize_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Layers whose whitespace-normalized text differs.
pub fn diff_layers(
    original: &Scenario,
    candidate: &Scenario,
) -> Result<BTreeSet<LayerIndex>, ScenarioError> {
    if original.mode() != candidate.mode() {
        return Err(ScenarioError::ModeMismatch {
            left: original.mode(),
            right: candidate.mode(),
        });
    }
    Ok(LayerIndex::ALL
        .into_iter()
        .filter(|&k| {
            normalize_whitespace(&layer_text(original, k))
                != normalize_whitespace(&layer_text(candidate, k))
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::super::{StructureMode, StructuredBody};
    use super::*;

    fn texts(t: [&str; 5]) -> Scenario {
        Scenario::from_texts("s", StructureMode::Unstructured, t).unwrap()
    }

    #[test]
    fn concat_simple() {
        assert_eq!(
            concat_layers(&texts(["a", "b", "c", "d", "e"])),
            "a\n\nb\n\nc\n\nd\n\ne"
        );
    }

    #[test]
    fn concat_keeps_empty_segments() {
        let joined = concat_layers(&texts(["a", "", "c", "d", "e"]));
        assert_eq!(joined.split(LAYER_SEPARATOR).count(), 5);
        assert_eq!(joined, "a\n\n\n\nc\n\nd\n\ne");
    }

    #[test]
    fn text_layer_is_identity() {
        let s = texts(["a", "buildings on both sides", "c", "d", "e"]);
        assert_eq!(layer_text(&s, LayerIndex::L2), "buildings on both sides");
    }

    fn hard_with_objects(objects: Vec<Component>) -> Scenario {
        let mut bodies = LayerIndex::ALL.map(|k| LayerBody::Structured(StructuredBody::empty(k)));
        let mut l4 = StructuredBody::empty(LayerIndex::L4);
        *l4.group_mut("objects").unwrap() = objects;
        bodies[3] = LayerBody::Structured(l4);
        Scenario::new("h", StructureMode::Hard, bodies).unwrap()
    }

    #[test]
    fn hard_flattening_rule() {
        let s = hard_with_objects(alloc::vec![
            Component::new("vehicle", "stationary truck").with_position("in front of ego")
        ]);
        assert_eq!(
            layer_text(&s, LayerIndex::L4),
            "objects: vehicle — stationary truck (in front of ego)"
        );
    }

    #[test]
    fn flattening_variants() {
        let s = hard_with_objects(alloc::vec![
            Component::new("pedestrian", "child").with_position("kerb").with_motion("running"),
            Component::new("animal", "dog").with_motion("crossing"),
            Component::new("other", "kite"),
        ]);
        assert_eq!(
            layer_text(&s, LayerIndex::L4),
            "objects: pedestrian — child (kerb; running)\n\
             objects: animal — dog (; crossing)\n\
             objects: other — kite"
        );
        assert_eq!(layer_text(&s, LayerIndex::L1), "");
    }

    #[test]
    fn swapping_components_changes_text() {
        let a = Component::new("vehicle", "bus");
        let b = Component::new("cyclist", "courier");
        let s1 = hard_with_objects(alloc::vec![a.clone(), b.clone()]);
        let s2 = hard_with_objects(alloc::vec![b, a]);
        assert_ne!(layer_text(&s1, LayerIndex::L4), layer_text(&s2, LayerIndex::L4));
    }

    #[test]
    fn diff_cases() {
        let s = texts(["a", "b", "c", "d", "e"]);
        assert!(diff_layers(&s, &s).unwrap().is_empty());
        let t = texts(["a", "b", "c", "d changed", "e"]);
        assert_eq!(
            diff_layers(&s, &t).unwrap().into_iter().collect::<Vec<_>>(),
            [LayerIndex::L4]
        );
        let ws = texts(["  a ", "b", "c", "d", "e\n"]);
        assert!(diff_layers(&s, &ws).unwrap().is_empty());
        let hard = hard_with_objects(Vec::new());
        assert!(matches!(
            diff_layers(&s, &hard),
            Err(ScenarioError::ModeMismatch { .. })
        ));
    }
}
