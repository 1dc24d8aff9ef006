//! `demos.json` reading and canonical writing.
//!
//! ```json
//! {"v": 1, "demos": [{"prev": "GoAlone", "next": "Halt", "tick": 12,
//!   "source": "ui-label", "state": {"p_h": [2.0, 0.0], ...},
//!   "obstacles": {"segments": [[x0, y0, x1, y1]], "discs": [[x, y, r]]}}]}
//! ```
//!
//! A bare array of records is also accepted on load. `obstacles` is optional
//! and only needed by `freePathLength`.

use std::path::Path;
use std::sync::Arc;

use serde_json::{json, Map, Value as Json};

use super::{DemoSource, Demonstration};
use crate::error::DemoError;
use crate::eval::{Disc, Obstacles, Segment, WorldState};
use crate::lang::{Action, AspType, DomainDefinition, Value};

fn schema(path: impl Into<String>, msg: impl Into<String>) -> DemoError {
    DemoError::Schema {
        path: path.into(),
        msg: msg.into(),
    }
}

fn number(v: &Json, path: &str) -> Result<f64, DemoError> {
    v.as_f64().ok_or_else(|| schema(path, "expected a number"))
}

fn numbers<const N: usize>(v: &Json, path: &str) -> Result<[f64; N], DemoError> {
    let arr = v
        .as_array()
        .filter(|a| a.len() == N)
        .ok_or_else(|| schema(path, format!("expected an array of {N} numbers")))?;
    let mut out = [0.0; N];
    for (i, x) in arr.iter().enumerate() {
        out[i] = number(x, &format!("{path}[{i}]"))?;
    }
    Ok(out)
}

fn value(v: &Json, ty: AspType, path: &str) -> Result<Value, DemoError> {
    match ty {
        AspType::Bool => v
            .as_bool()
            .map(Value::Bool)
            .ok_or_else(|| schema(path, "expected a boolean")),
        AspType::Scalar(_) => number(v, path).map(Value::Scalar),
        AspType::Vector(_) => numbers::<2>(v, path).map(Value::Vector),
    }
}

fn action(v: &Json, path: &str, dom: &DomainDefinition) -> Result<Action, DemoError> {
    let name = v
        .as_str()
        .ok_or_else(|| schema(path, "expected an action name"))?;
    dom.action(name)
        .ok_or_else(|| DemoError::UnknownAction(name.to_string()))
}

fn obstacles(v: &Json, path: &str) -> Result<Obstacles, DemoError> {
    let obj = v
        .as_object()
        .ok_or_else(|| schema(path, "expected an object"))?;
    let mut o = Obstacles::default();
    for (k, val) in obj {
        let p = format!("{path}.{k}");
        let arr = val
            .as_array()
            .ok_or_else(|| schema(&p, "expected an array"))?;
        match k.as_str() {
            "segments" => {
                for (i, s) in arr.iter().enumerate() {
                    let [x0, y0, x1, y1] = numbers::<4>(s, &format!("{p}[{i}]"))?;
                    o.segments.push(Segment {
                        a: [x0, y0],
                        b: [x1, y1],
                    });
                }
            }
            "discs" => {
                for (i, d) in arr.iter().enumerate() {
                    let [x, y, r] = numbers::<3>(d, &format!("{p}[{i}]"))?;
                    o.discs.push(Disc {
                        center: [x, y],
                        radius: r,
                    });
                }
            }
            _ => return Err(schema(p, "unknown field")),
        }
    }
    Ok(o)
}

fn record(v: &Json, path: &str, dom: &DomainDefinition) -> Result<Demonstration, DemoError> {
    let obj = v
        .as_object()
        .ok_or_else(|| schema(path, "expected an object"))?;
    let field = |k: &str| {
        obj.get(k)
            .ok_or_else(|| schema(format!("{path}.{k}"), "missing field"))
    };
    for k in obj.keys() {
        if !matches!(
            k.as_str(),
            "prev" | "next" | "tick" | "source" | "state" | "obstacles"
        ) {
            return Err(schema(format!("{path}.{k}"), "unknown field"));
        }
    }
    let prev = action(field("prev")?, &format!("{path}.prev"), dom)?;
    let next = action(field("next")?, &format!("{path}.next"), dom)?;
    let tick = field("tick")?
        .as_u64()
        .ok_or_else(|| schema(format!("{path}.tick"), "expected a non-negative integer"))?;
    let source = match obj.get("source") {
        None => DemoSource::Simulated,
        Some(s) => s
            .as_str()
            .and_then(DemoSource::from_name)
            .ok_or_else(|| {
                schema(
                    format!("{path}.source"),
                    "expected simulated, joystick or ui-label",
                )
            })?,
    };
    let spath = format!("{path}.state");
    let state = field("state")?
        .as_object()
        .ok_or_else(|| schema(&spath, "expected an object"))?;
    let mut world = WorldState::new();
    for (name, ty) in &dom.inputs {
        let p = format!("{spath}.{name}");
        let v = state.get(name).ok_or_else(|| schema(&p, "missing input"))?;
        world.set(name, value(v, *ty, &p)?);
    }
    if let Some(k) = state.keys().find(|k| dom.input_type(k).is_none()) {
        return Err(schema(format!("{spath}.{k}"), "not an input of the domain"));
    }
    if let Some(o) = obj.get("obstacles") {
        world.obstacles = obstacles(o, &format!("{path}.obstacles"))?;
    }
    Ok(Demonstration {
        prev,
        state: Arc::new(world),
        next,
        tick,
        source,
    })
}

pub fn demos_from_json(text: &str, dom: &DomainDefinition) -> Result<Vec<Demonstration>, DemoError> {
    let root: Json =
        serde_json::from_str(text).map_err(|e| schema("$", format!("invalid json: {e}")))?;
    let list = match &root {
        Json::Array(a) => a,
        Json::Object(o) => {
            match o.get("v") {
                Some(v) if v.as_u64() == Some(1) => {}
                _ => return Err(schema("v", "expected version 1")),
            }
            o.get("demos")
                .and_then(Json::as_array)
                .ok_or_else(|| schema("demos", "expected an array"))?
        }
        _ => return Err(schema("$", "expected an object or array")),
    };
    list.iter()
        .enumerate()
        .map(|(i, r)| record(r, &format!("demos[{i}]"), dom))
        .collect()
}

fn value_json(v: Value) -> Json {
    match v {
        Value::Bool(b) => json!(b),
        Value::Scalar(x) => json!(x),
        Value::Vector([x, y]) => json!([x, y]),
    }
}

pub fn demo_to_json(d: &Demonstration) -> Json {
    let state: Map<String, Json> = d
        .state
        .values
        .iter()
        .map(|(k, v)| (k.clone(), value_json(*v)))
        .collect();
    let mut rec = json!({
        "prev": d.prev.as_str(),
        "next": d.next.as_str(),
        "tick": d.tick,
        "source": d.source.name(),
        "state": state,
    });
    let o = &d.state.obstacles;
    if !o.is_empty() {
        rec["obstacles"] = json!({
            "segments": o.segments.iter().map(|s| [s.a[0], s.a[1], s.b[0], s.b[1]]).collect::<Vec<_>>(),
            "discs": o.discs.iter().map(|c| [c.center[0], c.center[1], c.radius]).collect::<Vec<_>>(),
        });
    }
    rec
}

/// Canonical text: versioned object, sorted keys, two-space indentation.
pub fn demos_to_json(demos: &[Demonstration]) -> String {
    let root = json!({
        "v": 1,
        "demos": demos.iter().map(demo_to_json).collect::<Vec<_>>(),
    });
    let mut s = serde_json::to_string_pretty(&root).expect("demos serialize");
    s.push('\n');
    s
}

pub fn load_demos(path: &Path, dom: &DomainDefinition) -> Result<Vec<Demonstration>, DemoError> {
    demos_from_json(&std::fs::read_to_string(path)?, dom)
}

pub fn save_demos(demos: &[Demonstration], path: &Path) -> Result<(), DemoError> {
    std::fs::write(path, demos_to_json(demos))?;
    Ok(())
}
