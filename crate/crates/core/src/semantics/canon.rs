use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::lang::{replace, Expr, Process, Unitary};

use super::config::{Component, Configuration, Mixture};

/// Classical values and a rounded fingerprint of the canonical state.
type ComponentKey = (Vec<bool>, Vec<(i64, i64)>);

fn visit_exprs(p: &Process, f: &mut dyn FnMut(&Expr)) {
    match p {
        Process::Nil => {}
        Process::Output { chan, args, cont, .. } => {
            f(chan);
            args.iter().for_each(&mut *f);
            visit_exprs(cont, f);
        }
        Process::Input { chan, cont, .. } => {
            f(chan);
            visit_exprs(cont, f);
        }
        Process::Action { targets, unitary, cont, .. } => {
            targets.iter().for_each(&mut *f);
            let mut u = unitary;
            while let Unitary::Power(base, exp) = u {
                f(exp);
                u = base;
            }
            visit_exprs(cont, f);
        }
        Process::Alloc { cont, .. } | Process::New { cont, .. } => visit_exprs(cont, f),
        Process::Parallel(a, b) => {
            visit_exprs(a, f);
            visit_exprs(b, f);
        }
        Process::Invoke { args, .. } => args.iter().for_each(f),
    }
}

pub(super) fn placeholder_index(name: &str) -> Option<usize> {
    name.strip_prefix('$')?.parse().ok()
}

pub(super) fn placeholder(k: usize) -> Expr {
    Expr::Var(format!("${k}"))
}

/// Placeholder indices in order of first syntactic occurrence.
fn placeholders_in(p: &Process, out: &mut Vec<usize>) {
    visit_exprs(p, &mut |e| {
        e.visit_vars(&mut |v| {
            if let Some(k) = placeholder_index(v) {
                if !out.contains(&k) {
                    out.push(k);
                }
            }
        })
    });
}

fn channels_in(p: &Process, out: &mut BTreeSet<String>) {
    visit_exprs(p, &mut |e| {
        if let Expr::Chan(c) = e {
            out.insert(c.clone());
        }
    });
}

pub(super) fn referenced_channels(threads: &[Process]) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    threads.iter().for_each(|t| channels_in(t, &mut out));
    out
}

fn mixture(mut m: Mixture) -> Mixture {
    let used = referenced_channels(&m.threads);
    m.restricted.retain(|c| used.contains(c));

    let arity = m.placeholders();
    let mut referenced = Vec::new();
    m.threads.iter().for_each(|t| placeholders_in(t, &mut referenced));
    let mut literal = HashMap::new();
    let mut kept = Vec::new();
    for k in 0..arity {
        if !referenced.contains(&k) {
            continue;
        }
        let first = m.components[0].values[k];
        if m.components.iter().all(|c| c.values[k] == first) {
            literal.insert(format!("${k}"), Expr::Bit(first));
        } else {
            kept.push(k);
        }
    }
    if !literal.is_empty() {
        m.threads = m.threads.iter().map(|t| replace(t, &literal)).collect();
    }

    let masked: HashMap<String, Expr> = kept.iter().map(|k| (format!("${k}"), Expr::Var("$".into()))).collect();
    let mut order: Vec<(String, usize)> =
        m.threads.iter().enumerate().map(|(i, t)| (replace(t, &masked).to_string(), i)).collect();
    order.sort();
    let mut first_seen = Vec::new();
    for (_, i) in &order {
        placeholders_in(&m.threads[*i], &mut first_seen);
    }
    first_seen.retain(|k| kept.contains(k));
    let renumber: HashMap<String, Expr> =
        first_seen.iter().enumerate().map(|(new, old)| (format!("${old}"), placeholder(new))).collect();
    let mut threads: Vec<(String, Process)> = m
        .threads
        .iter()
        .map(|t| {
            let t = if renumber.is_empty() { t.clone() } else { replace(t, &renumber) };
            (t.to_string(), t)
        })
        .collect();
    threads.sort_by(|a, b| a.0.cmp(&b.0));
    m.threads = threads.into_iter().map(|(_, t)| t).collect();

    let mut merged: BTreeMap<ComponentKey, Component> = BTreeMap::new();
    for c in m.components {
        let state = c.state.canonical();
        let values: Vec<bool> = first_seen.iter().map(|k| c.values[*k]).collect();
        let amps = state
            .amplitudes()
            .iter()
            .map(|a| ((a.re * 1e9).round() as i64, (a.im * 1e9).round() as i64))
            .collect();
        merged
            .entry((values.clone(), amps))
            .and_modify(|e| e.weight += c.weight)
            .or_insert(Component { weight: c.weight, state, values });
    }
    m.components = merged.into_values().collect();
    m
}

/// Normal form: restricted channels without references dropped, uniform
/// placeholders replaced by their value, remaining placeholders numbered by
/// first occurrence, threads sorted, states phase-fixed with sorted qubits,
/// equal components merged, probabilistic branches sorted by their values
/// and a single branch collapsed.
pub fn canonicalize(c: Configuration) -> Configuration {
    match c {
        Configuration::Mixed(m) => Configuration::Mixed(mixture(m)),
        Configuration::Probabilistic(mut bs) => {
            if bs.len() == 1 {
                return Configuration::Mixed(mixture(bs.pop().expect("one branch").mixture));
            }
            for b in &mut bs {
                b.mixture = mixture(std::mem::replace(&mut b.mixture, Mixture::trivial()));
            }
            bs.sort_by(|a, b| a.values.cmp(&b.values).then_with(|| a.mixture.key().cmp(&b.mixture.key())));
            Configuration::Probabilistic(bs)
        }
    }
}
