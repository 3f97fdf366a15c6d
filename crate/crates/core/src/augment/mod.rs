//! Layer-targeted scenario editing through a chat model.

mod client;
mod generate;
mod prompt;

use alloc::string::String;
use alloc::vec::Vec;

pub use client::{ChatClient, ChatRequest, ClientError, MockClient, MockFaults, MOCK_MODEL_ID};
pub use generate::{
    assemble, conversation_count, conversation_seed, enforce_single_layer_edit, generate_edits,
    parse_reply, repair_structured_output, run_conversation, split_documents, variant_id,
    EditVerdict, GenerationOutcome, GenerationSettings, Quarantined, Repaired,
    DEFAULT_MAX_RETRIES,
};
pub use prompt::{
    scenario_schema, EditRequest, PromptBuilder, PromptBundle, TaskSet, DEFAULT_SYSTEM_PROMPT,
    L4_TASK, PAYLOAD_CLOSE, PAYLOAD_OPEN, REPAIR_MARKER, SCENARIO_SENTINEL, UNSTRUCTURED_TASK,
};

use crate::LayerIndex;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AugmentError {
    #[error("invalid edit request: {0}")]
    InvalidRequest(String),
    #[error("invalid prompt configuration: {0}")]
    InvalidConfig(String),
    #[error("no task text configured for layer {0}")]
    MissingTaskText(LayerIndex),
    #[error(transparent)]
    Client(#[from] ClientError),
    #[error("reply still invalid after {attempts} attempt(s): {}", messages.join("; "))]
    ExhaustedRepairs {
        attempts: usize,
        messages: Vec<String>,
    },
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{parse_scenario, LayerBody, StructuredBody};
    use crate::{Component, ContextMode, Scenario, StructureMode, Taxonomy};
    use alloc::format;

    fn hard_source() -> Scenario {
        let mut bodies = LayerIndex::ALL.map(|k| LayerBody::Structured(StructuredBody::empty(k)));
        let mut l1 = StructuredBody::empty(LayerIndex::L1);
        l1.group_mut("roads")
            .unwrap()
            .push(Component::new("urban road", "two lanes, dry asphalt"));
        bodies[0] = LayerBody::Structured(l1);
        let mut l4 = StructuredBody::empty(LayerIndex::L4);
        l4.group_mut("objects").unwrap().push(
            Component::new("vehicle", "white van")
                .with_position("ahead")
                .with_motion("driving straight"),
        );
        bodies[3] = LayerBody::Structured(l4);
        Scenario::new("ref-01", StructureMode::Hard, bodies).unwrap()
    }

    fn text_source(mode: StructureMode) -> Scenario {
        Scenario::from_texts(
            "t1",
            mode,
            ["A dry two-lane road.", "Houses on both sides.", "", "A van ahead.", "Sunny noon."],
        )
        .unwrap()
    }

    #[test]
    fn independent_hard_edits_only_target() {
        let req = EditRequest::new(hard_source(), LayerIndex::L4, ContextMode::Independent, 5);
        let out = generate_edits(&MockClient::new(7), &PromptBuilder::default(), &req, &GenerationSettings::default())
            .unwrap();
        assert_eq!(out.accepted.len(), 5);
        assert!(out.quarantined.is_empty());
        assert_eq!(out.noops, 0);
        for (i, s) in out.accepted.iter().enumerate() {
            assert_eq!(s.id, format!("ref-01-L4-v{i:02}"));
            let p = s.provenance.as_ref().unwrap();
            assert_eq!(p.source_id, "ref-01");
            assert_eq!(p.edited_layer, LayerIndex::L4);
            assert_eq!(p.model_id, MOCK_MODEL_ID);
            s.validate(&Taxonomy::default()).unwrap();
            assert_eq!(s.components(LayerIndex::L4, "objects").unwrap().len(), 2);
        }
    }

    #[test]
    fn shared_text_edits_every_layer_kind() {
        for mode in [StructureMode::Unstructured, StructureMode::Soft] {
            for k in LayerIndex::ALL {
                let req = EditRequest::new(text_source(mode), k, ContextMode::Shared, 3);
                let out = generate_edits(&MockClient::new(1), &PromptBuilder::default(), &req, &GenerationSettings::default())
                    .unwrap();
                assert_eq!(out.accepted.len(), 3, "{mode} {k}");
                assert_eq!(out.noops, 0);
            }
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let req = EditRequest::new(hard_source(), LayerIndex::L1, ContextMode::Independent, 3);
        let run = || {
            generate_edits(&MockClient::new(3), &PromptBuilder::default(), &req, &GenerationSettings::default())
                .unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn malformed_replies_are_repaired() {
        let client = MockClient::new(0).with_faults(MockFaults {
            malformed_replies: 1,
            invalid_replies: 1,
            ..MockFaults::default()
        });
        let req = EditRequest::new(hard_source(), LayerIndex::L4, ContextMode::Independent, 2);
        let out = generate_edits(&client, &PromptBuilder::default(), &req, &GenerationSettings::default()).unwrap();
        assert_eq!(out.accepted.len(), 2);
        assert_eq!(out.retries, 4);
    }

    #[test]
    fn persistent_invalid_output_exhausts_repairs() {
        let client = MockClient::new(0).with_faults(MockFaults {
            always_invalid: true,
            ..MockFaults::default()
        });
        let req = EditRequest::new(hard_source(), LayerIndex::L4, ContextMode::Independent, 1);
        match generate_edits(&client, &PromptBuilder::default(), &req, &GenerationSettings::default()) {
            Err(AugmentError::ExhaustedRepairs { attempts, messages }) => {
                assert_eq!(attempts, 1 + DEFAULT_MAX_RETRIES);
                assert_eq!(messages.len(), attempts);
                assert!(messages[0].contains("layers[4]"), "{}", messages[0]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn touching_another_layer_is_quarantined() {
        let client = MockClient::new(0).with_faults(MockFaults {
            touch_other_layer: true,
            ..MockFaults::default()
        });
        let req = EditRequest::new(text_source(StructureMode::Unstructured), LayerIndex::L2, ContextMode::Shared, 4);
        let out = generate_edits(&client, &PromptBuilder::default(), &req, &GenerationSettings::default()).unwrap();
        assert!(out.accepted.is_empty());
        assert_eq!(out.quarantined.len(), 4);
        for q in &out.quarantined {
            assert_eq!(q.violations.len(), 1);
            assert_ne!(q.violations[0], LayerIndex::L2);
        }
    }

    #[test]
    fn noop_is_accepted_and_counted() {
        let client = MockClient::new(0).with_faults(MockFaults {
            noop: true,
            ..MockFaults::default()
        });
        let req = EditRequest::new(hard_source(), LayerIndex::L5, ContextMode::Independent, 2);
        let out = generate_edits(&client, &PromptBuilder::default(), &req, &GenerationSettings::default()).unwrap();
        assert_eq!(out.noops, 2);
        assert_eq!(out.accepted.len(), 2);
    }

    #[test]
    fn gate_verdicts() {
        let a = text_source(StructureMode::Unstructured);
        let mut b = a.clone();
        b.set_layer(LayerIndex::L3, LayerBody::Text("Cones.".into())).unwrap();
        assert_eq!(
            enforce_single_layer_edit(&a, &b, LayerIndex::L3).unwrap(),
            EditVerdict::Accepted { noop: false }
        );
        assert_eq!(
            enforce_single_layer_edit(&a, &b, LayerIndex::L1).unwrap(),
            EditVerdict::Violations(alloc::vec![LayerIndex::L3])
        );
        let mut ws = a.clone();
        ws.set_layer(LayerIndex::L1, LayerBody::Text("  A dry   two-lane road. ".into())).unwrap();
        assert_eq!(
            enforce_single_layer_edit(&a, &ws, LayerIndex::L4).unwrap(),
            EditVerdict::Accepted { noop: true }
        );
    }

    #[test]
    fn split_handles_arrays_fences_and_sentinels() {
        assert_eq!(split_documents("```json\n{\"a\":1}\n```").len(), 1);
        assert_eq!(split_documents("[{\"a\":1},{\"b\":2}]").len(), 2);
        let r = format!("{{}}\n{SCENARIO_SENTINEL}\n{{}}\n{SCENARIO_SENTINEL}\n");
        assert_eq!(split_documents(&r), ["{}", "{}"]);
    }

    #[test]
    fn reply_count_must_match() {
        let req = EditRequest::new(text_source(StructureMode::Unstructured), LayerIndex::L1, ContextMode::Shared, 2);
        let bundle = PromptBuilder::default().build(&req).unwrap();
        let doc = crate::scenario::serialize_scenario(&req.source);
        let err = parse_reply(&doc, &bundle, &Taxonomy::default()).unwrap_err();
        assert!(err.contains("expected 2"));
        let two = format!("{doc}{SCENARIO_SENTINEL}\n{doc}");
        let parsed = parse_reply(&two, &bundle, &Taxonomy::default()).unwrap();
        assert_eq!(parsed.len(), 2);
        assert_eq!(parsed[0], parse_scenario(&doc, StructureMode::Unstructured, &Taxonomy::default()).unwrap());
    }
}
