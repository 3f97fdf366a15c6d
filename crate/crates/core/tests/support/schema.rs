//! Crafted hard-mode documents for the schema gate.
#![allow(dead_code)]

use serde_json::{json, Value};

pub fn base() -> Value {
    json!({
        "id": "gate",
        "L1": {
            "roads": [{"type": "urban road", "characteristics": "two lanes"}],
            "guidance": [{"type": "traffic light", "characteristics": "green", "position": "ahead"}]
        },
        "L2": {
            "environment": [{"type": "urban", "characteristics": "downtown"}],
            "structures": [{"type": "building", "characteristics": "towers"}]
        },
        "L3": {"objects": [{"type": "roadworks", "characteristics": "barrels in the right lane"}]},
        "L4": {"objects": [
            {"type": "vehicle", "characteristics": "sedan", "motion": "straight"},
            {"type": "pedestrian", "characteristics": "man in a coat"}
        ]},
        "L5": {
            "weather": [{"type": "clear", "characteristics": "dry"}],
            "illumination": [{"type": "daylight", "characteristics": "noon"}]
        }
    })
}

pub fn with(f: impl FnOnce(&mut Value)) -> Value {
    let mut v = base();
    f(&mut v);
    v
}

pub fn invalid_documents() -> Vec<(&'static str, Value, &'static str)> {
    vec![
        ("bad L4 category", with(|v| v["L4"]["objects"][0]["type"] = json!("spaceship")), "layers[4].objects[0].category"),
        ("bad L1 category", with(|v| v["L1"]["roads"][0]["type"] = json!("moon road")), "layers[1].roads[0].category"),
        ("bad L2 category", with(|v| v["L2"]["environment"][0]["type"] = json!("ocean floor")), "layers[2].environment[0].category"),
        ("bad L5 category", with(|v| v["L5"]["illumination"][0]["type"] = json!("purple")), "layers[5].illumination[0].category"),
        ("empty L3 category", with(|v| v["L3"]["objects"][0]["type"] = json!("  ")), "layers[3].objects[0].category"),
        ("missing type", with(|v| { v["L4"]["objects"][1].as_object_mut().unwrap().remove("type"); }), "layers[4].objects[1].category"),
        ("missing characteristics", with(|v| { v["L4"]["objects"][1].as_object_mut().unwrap().remove("characteristics"); }), "layers[4].objects[1].characteristics"),
        ("empty characteristics", with(|v| v["L2"]["structures"][0]["characteristics"] = json!("")), "layers[2].structures[0].characteristics"),
        ("blank characteristics", with(|v| v["L5"]["weather"][0]["characteristics"] = json!("   ")), "layers[5].weather[0].characteristics"),
        ("numeric characteristics", with(|v| v["L4"]["objects"][0]["characteristics"] = json!(3)), "layers[4].objects[0].characteristics"),
        ("motion in L1", with(|v| v["L1"]["roads"][0]["motion"] = json!("moving")), "layers[1].roads[0].motion"),
        ("motion in L2", with(|v| v["L2"]["structures"][0]["motion"] = json!("swaying")), "layers[2].structures[0].motion"),
        ("motion in L3", with(|v| v["L3"]["objects"][0]["motion"] = json!("sliding")), "layers[3].objects[0].motion"),
        ("motion in L5", with(|v| v["L5"]["weather"][0]["motion"] = json!("blowing")), "layers[5].weather[0].motion"),
        ("missing L5", with(|v| { v.as_object_mut().unwrap().remove("L5"); }), "layers[5]"),
        ("missing L1", with(|v| { v.as_object_mut().unwrap().remove("L1"); }), "layers[1]"),
        ("sixth layer", with(|v| v["L6"] = json!({"objects": []})), "layers[6]"),
        ("undeclared group", with(|v| v["L4"]["vehicles"] = json!([])), "layers[4]"),
        ("text layer in hard mode", with(|v| v["L4"] = json!("a van")), "layers[4]"),
        ("component not an object", with(|v| v["L4"]["objects"][0] = json!("sedan")), "layers[4].objects[0]"),
    ]
}
