use alloc::string::String;
use core::fmt::Write;

use serde_json::Value;

use super::template::LayerIndex;
use super::{Component, LayerBody, Provenance, Scenario, StructuredBody};

/// Renders a scenario as its JSON document.
///
/// Key order is fixed: `id`, `mode`, `L1`..`L5`, `provenance`, then unknown
/// top-level fields sorted by key. Hard layers list every template group in
/// template order; a layer with no components at all is written as `[]`.
pub fn serialize_scenario(s: &Scenario) -> String {
    let mut w = JsonWriter::default();
    w.open('{');
    w.key("id");
    w.string(&s.id);
    w.key("mode");
    w.string(s.mode().as_str());
    for layer in s.layers() {
        w.key(&layer.index().key());
        match layer.body() {
            LayerBody::Text(t) => w.string(t),
            LayerBody::Structured(b) => write_body(&mut w, layer.index(), b),
        }
    }
    if let Some(p) = &s.provenance {
        w.key("provenance");
        write_provenance(&mut w, p);
    }
    for (k, v) in &s.extras {
        w.key(k);
        w.raw(&serde_json::to_string(v).unwrap_or_else(|_| String::from("null")));
    }
    w.close('}');
    w.out.push('\n');
    w.out
}

fn write_body(w: &mut JsonWriter, k: LayerIndex, body: &StructuredBody) {
    if body.is_empty() {
        w.raw("[]");
        return;
    }
    w.open('{');
    for &g in k.groups() {
        w.key(g);
        let comps = body.group(g).unwrap_or(&[]);
        if comps.is_empty() {
            w.raw("[]");
            continue;
        }
        w.open('[');
        for c in comps {
            w.item();
            write_component(w, c);
        }
        w.close(']');
    }
    w.close('}');
}

fn write_component(w: &mut JsonWriter, c: &Component) {
    w.open('{');
    w.key("type");
    w.string(&c.category);
    w.key("characteristics");
    w.string(&c.characteristics);
    if let Some(p) = &c.position {
        w.key("position");
        w.string(p);
    }
    if let Some(m) = &c.motion {
        w.key("motion");
        w.string(m);
    }
    for (k, v) in &c.extras {
        w.key(k);
        w.string(v);
    }
    w.close('}');
}

fn write_provenance(w: &mut JsonWriter, p: &Provenance) {
    w.open('{');
    w.key("source_id");
    w.string(&p.source_id);
    w.key("edited_layer");
    w.raw(&alloc::format!("{}", p.edited_layer.get()));
    w.key("strategy");
    w.string(p.strategy.as_str());
    w.key("context_mode");
    w.string(p.context_mode.as_str());
    w.key("model_id");
    w.string(&p.model_id);
    w.key("temperature");
    w.raw(&serde_json::to_string(&Value::from(p.temperature)).unwrap_or_default());
    w.key("created_at");
    w.string(&p.created_at);
    w.close('}');
}

/// Minimal pretty printer with two-space indentation.
#[derive(Default)]
struct JsonWriter {
    out: String,
    depth: usize,
    // Whether the current container already holds an entry.
    has_entry: alloc::vec::Vec<bool>,
}

impl JsonWriter {
    fn open(&mut self, c: char) {
        self.out.push(c);
        self.depth += 1;
        self.has_entry.push(false);
    }

    fn close(&mut self, c: char) {
        self.depth -= 1;
        if self.has_entry.pop().unwrap_or(false) {
            self.newline();
        }
        self.out.push(c);
    }

    fn newline(&mut self) {
        self.out.push('\n');
        for _ in 0..self.depth {
            self.out.push_str("  ");
        }
    }

    fn item(&mut self) {
        if let Some(last) = self.has_entry.last_mut() {
            if *last {
                self.out.push(',');
            }
            *last = true;
        }
        self.newline();
    }

    fn key(&mut self, k: &str) {
        self.item();
        self.string(k);
        self.out.push_str(": ");
    }

    fn string(&mut self, s: &str) {
        let quoted = serde_json::to_string(s).unwrap_or_default();
        let _ = self.out.write_str(&quoted);
    }

    fn raw(&mut self, s: &str) {
        self.out.push_str(s);
    }
}
