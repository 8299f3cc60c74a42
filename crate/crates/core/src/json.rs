//! Machine-readable reports.
//!
//! Every report is a JSON object with a `command` field and validates
//! against the schema of that command in `schemas/`. Object keys are
//! emitted in sorted order, so equal inputs give byte-identical output.

use crate::analysis::{BoundedVerdict, LivenessVerdict};
use crate::frontend::print_global;
use crate::inference::{InferError, Inference, Minimal, Outcome, SearchStats};
use crate::metatheory::FileEntry;
use crate::semantics::StateGraph;
use crate::terms::GlobalGraph;
use crate::typing::{global_name, Derivation, Rejection};
use crate::ParticipantSet;
use serde_json::{json, Value};

pub const CHECK_SCHEMA: &str = include_str!("../schemas/check.schema.json");
pub const INFER_SCHEMA: &str = include_str!("../schemas/infer.schema.json");
pub const ANALYZE_SCHEMA: &str = include_str!("../schemas/analyze.schema.json");
pub const META_SCHEMA: &str = include_str!("../schemas/meta.schema.json");

/// The schema text for the reports of `command`.
pub fn schema(command: &str) -> Option<&'static str> {
    match command {
        "check" => Some(CHECK_SCHEMA),
        "infer" => Some(INFER_SCHEMA),
        "analyze" => Some(ANALYZE_SCHEMA),
        "meta" => Some(META_SCHEMA),
        _ => None,
    }
}

pub fn render(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("values always serialize");
    s.push('\n');
    s
}

pub fn check_report(
    global: &str,
    session: &str,
    ignored: &ParticipantSet,
    result: &Result<Derivation, Rejection>,
) -> Value {
    let mut v = json!({
        "command": "check",
        "global": global,
        "session": session,
        "ignored": ignored,
        "accepted": result.is_ok(),
    });
    match result {
        Ok(d) => {
            let tree = d.to_json();
            v["type"] = tree["global"].clone();
            v["derivation"] = tree["derivation"].clone();
        }
        Err(r) => v["rejection"] = json!(r),
    }
    v
}

fn outcome_json(
    global: &GlobalGraph,
    ignored: &ParticipantSet,
    o: &Outcome,
    equations: bool,
) -> Value {
    let mut v = json!({
        "type": print_global(global),
        "ignored": ignored,
        "size": o.size,
        "weak": o.weak,
    });
    if equations {
        v["equations"] = o.to_json();
    }
    v
}

fn stats_json(s: &SearchStats) -> Value {
    json!(s)
}

pub fn infer_report(session: &str, inf: &Inference, equations: bool) -> Value {
    json!({
        "command": "infer",
        "session": session,
        "minimal": false,
        "outcomes": inf
            .outcomes
            .iter()
            .map(|o| outcome_json(&o.global(), o.ignored(), &o.outcome, equations))
            .collect::<Vec<_>>(),
        "stats": stats_json(&inf.stats),
    })
}

pub fn minimal_report(session: &str, res: &Result<Minimal, InferError>, equations: bool) -> Value {
    let mut v = json!({
        "command": "infer",
        "session": session,
        "minimal": true,
    });
    match res {
        Ok(m) => {
            v["outcomes"] = json!([outcome_json(&m.global, &m.ignored, &m.outcome, equations)]);
            v["stats"] = stats_json(&m.stats);
        }
        Err(InferError::NoSolutionWithinBudget { truncated }) => {
            v["outcomes"] = json!([]);
            v["truncated"] = json!(truncated);
        }
    }
    v
}

pub fn bounded_json(g: &GlobalGraph, b: &BoundedVerdict) -> Value {
    let mut v = json!({ "type": print_global(g), "holds": b.holds });
    if let Some((n, p)) = &b.witness {
        v["witness"] = json!({ "node": global_name(g, *n), "participant": p });
    }
    v
}

pub fn liveness_json(l: &LivenessVerdict) -> Value {
    json!(l)
}

/// The pieces of an `analyze` run; absent ones are omitted.
#[derive(Default)]
pub struct AnalyzeParts {
    pub global: Option<String>,
    pub session: Option<String>,
    pub bounded: Option<Value>,
    pub depth: Option<Value>,
    pub lock_freedom: Option<Value>,
    pub deadlock_freedom: Option<Value>,
    pub state_graph: Option<Value>,
}

pub fn analyze_report(parts: AnalyzeParts) -> Value {
    let mut v = json!({ "command": "analyze" });
    let fields = [
        ("global", parts.global.map(Value::from)),
        ("session", parts.session.map(Value::from)),
        ("bounded", parts.bounded),
        ("depth", parts.depth),
        ("lock_freedom", parts.lock_freedom),
        ("deadlock_freedom", parts.deadlock_freedom),
        ("state_graph", parts.state_graph),
    ];
    for (k, f) in fields {
        if let Some(f) = f {
            v[k] = f;
        }
    }
    v
}

pub fn state_graph_json(sg: &StateGraph) -> Value {
    sg.to_json()
}

pub fn meta_report(seed: u64, entries: &[FileEntry]) -> Value {
    json!({
        "command": "meta",
        "seed": seed,
        "passed": entries.iter().all(|e| e.report.passed()),
        "entries": entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schemas_are_json() {
        for c in ["check", "infer", "analyze", "meta"] {
            let s: Value = serde_json::from_str(schema(c).unwrap()).unwrap();
            assert_eq!(s["properties"]["command"]["const"], c);
        }
        assert!(schema("other").is_none());
    }

    #[test]
    fn keys_are_sorted() {
        let v = analyze_report(AnalyzeParts {
            session: Some("M".into()),
            ..AnalyzeParts::default()
        });
        assert_eq!(
            render(&v),
            "{\n  \"command\": \"analyze\",\n  \"session\": \"M\"\n}\n"
        );
    }
}
