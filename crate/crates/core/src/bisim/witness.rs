use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};

use serde_json::{json, Value as Json};

use crate::lang::Value;
use crate::qstate::DensityMatrix;
use crate::semantics::{Label, Lts, Transition};

use super::refine::{Move, Refiner, Relation, Signature};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    fn name(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
        }
    }
}

#[derive(Clone, Debug)]
pub enum Mismatch {
    /// After `trace`, only one side can perform `label`.
    Unmatched { label: String, side: Side },
    /// Both sides output on `label` but the environment ends up in different
    /// states.
    Density { label: String, left_only: Vec<DensityMatrix>, right_only: Vec<DensityMatrix> },
    /// Both sides output on `label` with the same densities but different
    /// branch probabilities.
    Probability { label: String, left: Vec<f64>, right: Vec<f64> },
    /// No trace tells the two apart; they differ in branching structure.
    Branching { detail: String },
}

/// Why two states are not equivalent.
#[derive(Clone, Debug)]
pub struct Witness {
    /// Observable labels leading to the mismatch, outputs with their qubits
    /// anonymised.
    pub trace: Vec<String>,
    pub mismatch: Mismatch,
    /// A concrete run from the left state to a state exhibiting the
    /// mismatch; each step is the label taken and the state reached.
    pub left_path: Vec<(Label, usize)>,
    pub right_path: Vec<(Label, usize)>,
}

impl Witness {
    pub fn to_json(&self) -> Json {
        let path = |p: &[(Label, usize)]| -> Json {
            p.iter().map(|(l, s)| json!({ "label": l.to_string(), "state": s })).collect()
        };
        let dens = |ds: &[DensityMatrix]| -> Json { ds.iter().map(|d| d.to_string()).collect() };
        let mismatch = match &self.mismatch {
            Mismatch::Unmatched { label, side } => {
                json!({ "kind": "unmatched", "label": label, "only_on": side.name() })
            }
            Mismatch::Density { label, left_only, right_only } => json!({
                "kind": "density_mismatch",
                "label": label,
                "left_only": dens(left_only),
                "right_only": dens(right_only),
            }),
            Mismatch::Probability { label, left, right } => {
                json!({ "kind": "probability_mismatch", "label": label, "left": left, "right": right })
            }
            Mismatch::Branching { detail } => json!({ "kind": "branching", "detail": detail }),
        };
        json!({
            "trace": self.trace,
            "mismatch": mismatch,
            "left_path": path(&self.left_path),
            "right_path": path(&self.right_path),
        })
    }
}

impl std::fmt::Display for Witness {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let trace = if self.trace.is_empty() { "ε".to_string() } else { self.trace.join(" ") };
        write!(f, "after {trace}: ")?;
        match &self.mismatch {
            Mismatch::Unmatched { label, side } => write!(f, "only the {} side can do {label}", side.name()),
            Mismatch::Density { label, left_only, right_only } => {
                write!(f, "{label} leaves different environment states")?;
                for d in left_only {
                    write!(f, "\n  left only:  {d}")?;
                }
                for d in right_only {
                    write!(f, "\n  right only: {d}")?;
                }
                Ok(())
            }
            Mismatch::Probability { label, left, right } => {
                write!(f, "{label} has branch probabilities {left:?} on the left and {right:?} on the right")
            }
            Mismatch::Branching { detail } => write!(f, "{detail}"),
        }
    }
}

/// Observable key of a label: inputs as printed, outputs without qubit names.
pub fn visible(label: &Label) -> Option<String> {
    match label {
        Label::Input { .. } => Some(label.to_string()),
        Label::Output { channel, values, qubits } => Some(
            Label::Output { channel: channel.clone(), values: values.clone(), qubits: vec!["_".into(); qubits.len()] }
                .to_string(),
        ),
        Label::Tau | Label::Prob(_) => None,
    }
}

fn silent_closure(lts: &Lts, start: impl IntoIterator<Item = usize>) -> BTreeSet<usize> {
    let mut seen: BTreeSet<usize> = start.into_iter().collect();
    let mut stack: Vec<usize> = seen.iter().copied().collect();
    while let Some(u) = stack.pop() {
        for t in lts.outgoing(u) {
            if visible(&t.label).is_none() && seen.insert(t.dst) {
                stack.push(t.dst);
            }
        }
    }
    seen
}

fn moves<'a>(lts: &'a Lts, set: &BTreeSet<usize>) -> BTreeMap<String, Vec<&'a Transition>> {
    let mut out: BTreeMap<String, Vec<&Transition>> = BTreeMap::new();
    for &u in set {
        for t in lts.outgoing(u) {
            if let Some(k) = visible(&t.label) {
                out.entry(k).or_default().push(t);
            }
        }
    }
    out
}

struct Branch {
    src: usize,
    values: Vec<Value>,
    prob: f64,
    density: DensityMatrix,
}

fn branches(lts: &Lts, ts: &[&Transition]) -> Vec<Branch> {
    ts.iter()
        .flat_map(|t| {
            t.branches.iter().map(|b| Branch {
                src: t.src,
                values: b.values.clone(),
                prob: b.prob,
                density: lts.env_density(b.target).expect("branch targets are not probabilistic"),
            })
        })
        .collect()
}

fn unmatched<'a>(mine: &'a [Branch], theirs: &[Branch], tol: f64) -> Vec<&'a Branch> {
    let mut out: Vec<&Branch> = Vec::new();
    for b in mine {
        let matched = theirs.iter().any(|o| o.values == b.values && o.density.approx_eq(&b.density, tol));
        if !matched && !out.iter().any(|x| x.density.approx_eq(&b.density, tol)) {
            out.push(b);
        }
    }
    out
}

fn probs(bs: &[Branch], tol: f64) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for b in bs {
        if !out.iter().any(|p| (p - b.prob).abs() <= tol) {
            out.push(b.prob);
        }
    }
    out.sort_by(f64::total_cmp);
    out
}

/// Shortest run from `start` consuming exactly `trace` and ending in a state
/// satisfying `goal`.
fn path_to(lts: &Lts, start: usize, trace: &[String], goal: &dyn Fn(usize) -> bool) -> Vec<(Label, usize)> {
    let mut parent: HashMap<(usize, usize), ((usize, usize), Label)> = HashMap::new();
    let mut queue = VecDeque::from([(start, 0)]);
    let mut seen = HashSet::from([(start, 0)]);
    while let Some((u, k)) = queue.pop_front() {
        if k == trace.len() && goal(u) {
            let mut out = Vec::new();
            let mut cur = (u, k);
            while let Some((prev, label)) = parent.get(&cur) {
                out.push((label.clone(), cur.0));
                cur = *prev;
            }
            out.reverse();
            return out;
        }
        for t in lts.outgoing(u) {
            let next = match visible(&t.label) {
                None => (t.dst, k),
                Some(v) if k < trace.len() && v == trace[k] => (t.dst, k + 1),
                Some(_) => continue,
            };
            if seen.insert(next) {
                parent.insert(next, ((u, k), t.label.clone()));
                queue.push_back(next);
            }
        }
    }
    Vec::new()
}

const MAX_PAIRS: usize = 20_000;

/// Searches for an observable difference between `s` and `t`: a label only
/// one side offers, or an output after which the environment differs.
fn trace_witness(lts: &Lts, s: usize, t: usize, tol: f64) -> Option<Witness> {
    let start = (silent_closure(lts, [s]), silent_closure(lts, [t]));
    let mut queue = VecDeque::from([(start.0.clone(), start.1.clone(), Vec::<String>::new())]);
    let mut seen = HashSet::from([start]);
    while let Some((a, b, trace)) = queue.pop_front() {
        let (ma, mb) = (moves(lts, &a), moves(lts, &b));
        let found = |side: Side, key: &String| {
            let (from, set) = if side == Side::Left { (s, &ma) } else { (t, &mb) };
            let srcs: BTreeSet<usize> = set[key].iter().map(|e| e.src).collect();
            let path = path_to(lts, from, &trace, &|u| srcs.contains(&u));
            let other = path_to(lts, if side == Side::Left { t } else { s }, &trace, &|_| true);
            let (left_path, right_path) = if side == Side::Left { (path, other) } else { (other, path) };
            Witness {
                trace: trace.clone(),
                mismatch: Mismatch::Unmatched { label: key.clone(), side },
                left_path,
                right_path,
            }
        };
        if let Some(k) = ma.keys().find(|k| !mb.contains_key(*k)) {
            return Some(found(Side::Left, k));
        }
        if let Some(k) = mb.keys().find(|k| !ma.contains_key(*k)) {
            return Some(found(Side::Right, k));
        }
        for (key, ta) in &ma {
            let tb = &mb[key];
            let (ba, bb) = (branches(lts, ta), branches(lts, tb));
            if ba.is_empty() && bb.is_empty() {
                continue;
            }
            let (lo, ro) = (unmatched(&ba, &bb, tol), unmatched(&bb, &ba, tol));
            let (pa, pb) = (probs(&ba, tol), probs(&bb, tol));
            let prob_differs = pa.len() != pb.len() || pa.iter().zip(&pb).any(|(x, y)| (x - y).abs() > tol);
            if lo.is_empty() && ro.is_empty() && !prob_differs {
                continue;
            }
            let path = |from: usize, src: Option<usize>| match src {
                Some(u) => path_to(lts, from, &trace, &|v| v == u),
                None => Vec::new(),
            };
            let mismatch = if !lo.is_empty() || !ro.is_empty() {
                Mismatch::Density {
                    label: key.clone(),
                    left_only: lo.iter().map(|b| b.density.clone()).collect(),
                    right_only: ro.iter().map(|b| b.density.clone()).collect(),
                }
            } else {
                Mismatch::Probability { label: key.clone(), left: pa, right: pb }
            };
            let (sa, sb) = if lo.is_empty() && ro.is_empty() {
                (ba.first().map(|b| b.src), bb.first().map(|b| b.src))
            } else {
                (lo.first().map(|b| b.src), ro.first().map(|b| b.src))
            };
            return Some(Witness {
                trace: trace.clone(),
                mismatch,
                left_path: path(s, sa),
                right_path: path(t, sb),
            });
        }
        for (key, ta) in &ma {
            let na = silent_closure(lts, ta.iter().map(|e| e.dst));
            let nb = silent_closure(lts, mb[key].iter().map(|e| e.dst));
            if seen.len() < MAX_PAIRS && seen.insert((na.clone(), nb.clone())) {
                let mut tr = trace.clone();
                tr.push(key.clone());
                queue.push_back((na, nb, tr));
            }
        }
    }
    None
}

fn describe(m: &Move) -> String {
    match m {
        Move::Tau(b) => format!("τ into class {b}"),
        Move::Input { channel, values, block } => {
            let vs: Vec<String> = values.iter().map(|v| v.to_string()).collect();
            format!("{channel}?[{}] into class {block}", vs.join(","))
        }
        Move::Output { channel, branches } => {
            let bs: Vec<String> = branches
                .iter()
                .map(|(v, p, r, b)| {
                    let vs: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                    format!("[{}] p#{p} ρ#{r} class {b}", vs.join(","))
                })
                .collect();
            format!("{channel}! with branches {{{}}}", bs.join("; "))
        }
    }
}

fn diff(a: &Signature, b: &Signature) -> String {
    let only = |x: &Signature, y: &Signature| -> Vec<String> {
        x.moves.iter().filter(|m| !y.moves.contains(m)).map(describe).collect()
    };
    let (la, lb) = (only(a, b), only(b, a));
    if la.is_empty() && lb.is_empty() {
        return "the probability mass each side assigns to the classes differs".to_string();
    }
    let mut parts = Vec::new();
    if !la.is_empty() {
        parts.push(format!("left can do {} which right cannot match", la.join(", ")));
    }
    if !lb.is_empty() {
        parts.push(format!("right can do {} which left cannot match", lb.join(", ")));
    }
    parts.join("; ")
}

fn branching_witness(lts: &Lts, s: usize, t: usize, relation: Relation, tol: f64) -> Witness {
    let mut r = Refiner::new(lts, relation, tol);
    let history = r.run();
    let split = history.iter().position(|p| !p.same(s, t)).unwrap_or(history.len() - 1);
    let prev = &history[split.saturating_sub(1)];
    let detail = diff(&r.signature(prev, s), &r.signature(prev, t));
    Witness { trace: Vec::new(), mismatch: Mismatch::Branching { detail }, left_path: Vec::new(), right_path: Vec::new() }
}

/// A witness for two states the checker found inequivalent.
pub fn find_witness(lts: &Lts, s: usize, t: usize, relation: Relation, tol: f64) -> Witness {
    trace_witness(lts, s, t, tol).unwrap_or_else(|| branching_witness(lts, s, t, relation, tol))
}
