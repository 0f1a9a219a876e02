use std::fmt::Write as _;

use serde_json::{json, Value as Json};

use crate::lang::Value;

use super::config::{Configuration, Mixture};
use super::lts::{Lts, StateKind};
use super::step::{InputValue, Label};

fn value_json(v: &Value) -> Json {
    match v {
        Value::Bit(b) => json!(u8::from(*b)),
        Value::Qubit(s) | Value::Chan(s) => json!(s),
    }
}

fn input_json(v: &InputValue) -> Json {
    match v {
        InputValue::Bit(b) => json!(u8::from(*b)),
        InputValue::Qubit(s) | InputValue::Chan(s) => json!(s),
    }
}

fn mixture_json(m: &Mixture) -> Json {
    let comps: Vec<Json> = m
        .components
        .iter()
        .map(|c| {
            json!({
                "weight": c.weight,
                "state": c.state.amplitudes().iter().map(|a| [a.re, a.im]).collect::<Vec<_>>(),
                "values": c.values.iter().map(|v| u8::from(*v)).collect::<Vec<_>>(),
            })
        })
        .collect();
    json!(comps)
}

pub fn label_json(l: &Label) -> Json {
    match l {
        Label::Tau => json!({"type": "tau"}),
        Label::Output { channel, values, qubits } => json!({
            "type": "output",
            "channel": channel,
            "values": values.iter().map(|v| v.iter().map(value_json).collect::<Vec<_>>()).collect::<Vec<_>>(),
            "qubits": qubits,
        }),
        Label::Input { channel, values } => json!({
            "type": "input",
            "channel": channel,
            "values": values.iter().map(input_json).collect::<Vec<_>>(),
        }),
        Label::Prob(p) => json!({"type": "prob", "prob": p}),
    }
}

fn state_json(id: usize, lts: &Lts) -> Json {
    let st = lts.state(id);
    let kind = match st.kind {
        StateKind::Nondeterministic => "n",
        StateKind::Probabilistic => "p",
    };
    match &st.config {
        Configuration::Mixed(m) => json!({
            "id": id,
            "kind": kind,
            "term": m.term(),
            "mixture": mixture_json(m),
            "qubits": m.qubits(),
            "owned": m.owned,
            "environment": m.environment,
        }),
        Configuration::Probabilistic(bs) => json!({
            "id": id,
            "kind": kind,
            "term": "⊞",
            "mixture": [],
            "branches": bs.iter().map(|b| json!({
                "prob": b.prob,
                "values": b.values.iter().map(value_json).collect::<Vec<_>>(),
                "term": b.mixture.term(),
                "mixture": mixture_json(&b.mixture),
                "qubits": b.mixture.qubits(),
            })).collect::<Vec<_>>(),
        }),
    }
}

pub fn to_json(lts: &Lts) -> Json {
    json!({
        "states": (0..lts.len()).map(|id| state_json(id, lts)).collect::<Vec<_>>(),
        "transitions": lts.transitions().iter().map(|t| json!({
            "src": t.src,
            "label": label_json(&t.label),
            "dst": t.dst,
        })).collect::<Vec<_>>(),
        "initial": lts.initial,
        "truncated": lts.truncated,
    })
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

pub fn to_dot(lts: &Lts) -> String {
    let mut out = String::from("digraph lts {\n  rankdir=TB;\n  node [fontname=\"monospace\"];\n");
    for (id, st) in lts.states().iter().enumerate() {
        let (shape, label) = match &st.config {
            Configuration::Mixed(m) => ("box", format!("{id}: {}", m.term())),
            Configuration::Probabilistic(_) => ("circle", format!("{id}")),
        };
        let extra = if id == lts.initial { ", penwidth=2" } else { "" };
        let _ = writeln!(out, "  s{id} [shape={shape}, label=\"{}\"{extra}];", escape(&label));
    }
    for t in lts.transitions() {
        let style = if matches!(t.label, Label::Prob(_)) { ", style=dashed" } else { "" };
        let _ = writeln!(out, "  s{} -> s{} [label=\"{}\"{style}];", t.src, t.dst, escape(&t.label.to_string()));
    }
    out.push_str("}\n");
    out
}
