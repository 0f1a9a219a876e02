use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::lang::Value;
use crate::qstate::DensityMatrix;

use super::config::{Configuration, Mixture};
use super::step::{Label, Semantics};
use super::SemanticsError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum StateKind {
    /// `S_n`: labelled transitions only.
    Nondeterministic,
    /// `S_p`: probabilistic transitions only.
    Probabilistic,
}

#[derive(Clone, Debug)]
pub struct LtsState {
    pub config: Configuration,
    pub kind: StateKind,
}

/// One branch of an output: the values that select it, its probability and
/// the branch configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct OutputBranch {
    pub values: Vec<Value>,
    pub prob: f64,
    pub target: usize,
}

#[derive(Clone, Debug)]
pub struct Transition {
    pub src: usize,
    pub label: Label,
    pub dst: usize,
    /// Filled for outputs only. With a single branch its target is `dst`.
    pub branches: Vec<OutputBranch>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    pub max_states: usize,
    pub max_depth: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_states: 200_000, max_depth: usize::MAX }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Lts {
    states: Vec<LtsState>,
    transitions: Vec<Transition>,
    outgoing: Vec<Vec<usize>>,
    pub initial: usize,
    /// Set when exploration stopped at a limit.
    pub truncated: bool,
}

impl Lts {
    pub fn new() -> Self {
        Lts::default()
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[LtsState] {
        &self.states
    }

    pub fn state(&self, id: usize) -> &LtsState {
        &self.states[id]
    }

    pub fn kind(&self, id: usize) -> StateKind {
        self.states[id].kind
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn outgoing(&self, id: usize) -> impl Iterator<Item = &Transition> {
        self.outgoing[id].iter().map(|t| &self.transitions[*t])
    }

    /// Indices into `transitions()` of the edges leaving `id`.
    pub fn outgoing_ids(&self, id: usize) -> &[usize] {
        &self.outgoing[id]
    }

    pub fn add_state(&mut self, config: Configuration) -> usize {
        let kind = if config.is_probabilistic() { StateKind::Probabilistic } else { StateKind::Nondeterministic };
        self.states.push(LtsState { config, kind });
        self.outgoing.push(Vec::new());
        self.states.len() - 1
    }

    /// A state without quantum content, for hand-built systems.
    pub fn add_plain_state(&mut self, kind: StateKind) -> usize {
        let id = self.add_state(Configuration::Mixed(Mixture::trivial()));
        self.states[id].kind = kind;
        id
    }

    pub fn add_transition(&mut self, src: usize, label: Label, dst: usize) {
        self.push(Transition { src, label, dst, branches: Vec::new() });
    }

    /// An output whose branches lead to the given states. Several branches
    /// go through a fresh probabilistic state.
    pub fn add_output(
        &mut self,
        src: usize,
        channel: &str,
        qubits: Vec<String>,
        branches: Vec<(Vec<Value>, f64, usize)>,
    ) -> usize {
        let mut branches: Vec<OutputBranch> =
            branches.into_iter().map(|(values, prob, target)| OutputBranch { values, prob, target }).collect();
        branches.sort_by(|a, b| a.values.cmp(&b.values));
        let dst = if branches.len() == 1 {
            branches[0].target
        } else {
            let p = self.add_plain_state(StateKind::Probabilistic);
            for b in &branches {
                self.add_transition(p, Label::Prob(b.prob), b.target);
            }
            p
        };
        let label = Label::Output {
            channel: channel.to_string(),
            values: branches.iter().map(|b| b.values.clone()).collect(),
            qubits,
        };
        self.push(Transition { src, label, dst, branches });
        dst
    }

    fn push(&mut self, t: Transition) {
        self.outgoing[t.src].push(self.transitions.len());
        self.transitions.push(t);
    }

    /// `ρ_E` of a non-probabilistic state.
    pub fn env_density(&self, id: usize) -> Option<DensityMatrix> {
        self.states[id].config.as_mixture().map(Mixture::env_density)
    }

    /// Both systems side by side; returns the offset added to `other`'s ids.
    pub fn disjoint_union(&self, other: &Lts) -> (Lts, usize) {
        let off = self.states.len();
        let mut u = self.clone();
        u.states.extend(other.states.iter().cloned());
        u.outgoing.extend(std::iter::repeat_with(Vec::new).take(other.states.len()));
        for t in &other.transitions {
            u.push(Transition {
                src: t.src + off,
                label: t.label.clone(),
                dst: t.dst + off,
                branches: t
                    .branches
                    .iter()
                    .map(|b| OutputBranch { target: b.target + off, ..b.clone() })
                    .collect(),
            });
        }
        u.truncated |= other.truncated;
        (u, off)
    }
}

enum Succ {
    Step { label: Label, key: String, config: Configuration, branches: Vec<(Vec<Value>, f64, String, Configuration)> },
    Prob { prob: f64, key: String, config: Configuration },
}

fn expand(sem: &Semantics, c: &Configuration) -> Result<Vec<Succ>, SemanticsError> {
    match c {
        Configuration::Probabilistic(bs) => Ok(bs
            .iter()
            .map(|b| {
                let config = Configuration::Mixed(b.mixture.clone());
                Succ::Prob { prob: b.prob, key: config.key(), config }
            })
            .collect()),
        Configuration::Mixed(_) => Ok(sem
            .transitions(c)?
            .into_iter()
            .map(|(label, config)| {
                let branches = match (&label, &config) {
                    (Label::Output { .. }, Configuration::Probabilistic(bs)) => bs
                        .iter()
                        .map(|b| {
                            let m = Configuration::Mixed(b.mixture.clone());
                            (b.values.clone(), b.prob, m.key(), m)
                        })
                        .collect(),
                    _ => Vec::new(),
                };
                Succ::Step { label, key: config.key(), config, branches }
            })
            .collect()),
    }
}

struct Builder {
    lts: Lts,
    index: HashMap<String, usize>,
    limits: Limits,
    next: Vec<usize>,
}

impl Builder {
    fn intern(&mut self, key: String, config: Configuration) -> Option<usize> {
        if let Some(id) = self.index.get(&key) {
            return Some(*id);
        }
        if self.lts.states.len() >= self.limits.max_states {
            self.lts.truncated = true;
            return None;
        }
        let id = self.lts.add_state(config);
        self.index.insert(key, id);
        self.next.push(id);
        Some(id)
    }

    fn has_edge(&self, src: usize, label: &Label, dst: usize) -> bool {
        self.lts.outgoing(src).any(|t| t.dst == dst && &t.label == label)
    }
}

/// Breadth-first exploration of every configuration reachable from `initial`.
/// Frontiers are expanded in parallel and merged in frontier order, so the
/// result does not depend on scheduling.
pub fn explore(sem: &Semantics, initial: Configuration, limits: Limits) -> Result<Lts, SemanticsError> {
    let mut b = Builder { lts: Lts::new(), index: HashMap::new(), limits, next: Vec::new() };
    let key = initial.key();
    b.lts.initial = b.intern(key, initial).expect("room for the initial state");
    let mut depth = 0;
    while !b.next.is_empty() {
        let frontier = std::mem::take(&mut b.next);
        let expanded: Vec<Vec<Succ>> = frontier
            .par_iter()
            .map(|id| expand(sem, &b.lts.states[*id].config))
            .collect::<Result<_, _>>()?;
        if depth >= limits.max_depth {
            if expanded.iter().any(|s| !s.is_empty()) {
                b.lts.truncated = true;
            }
            break;
        }
        for (src, succs) in frontier.into_iter().zip(expanded) {
            for s in succs {
                match s {
                    Succ::Prob { prob, key, config } => {
                        if let Some(dst) = b.intern(key, config) {
                            b.lts.add_transition(src, Label::Prob(prob), dst);
                        }
                    }
                    Succ::Step { label, key, config, branches } => {
                        let single = match &label {
                            Label::Output { values, .. } if branches.is_empty() => Some(values[0].clone()),
                            _ => None,
                        };
                        let Some(dst) = b.intern(key, config) else { continue };
                        let mut out = Vec::new();
                        for (values, prob, k, c) in branches {
                            match b.intern(k, c) {
                                Some(target) => out.push(OutputBranch { values, prob, target }),
                                None => break,
                            }
                        }
                        if let Some(values) = single {
                            out.push(OutputBranch { values, prob: 1.0, target: dst });
                        }
                        if matches!(label, Label::Output { values: ref v, .. } if v.len() != out.len()) {
                            continue;
                        }
                        if !b.has_edge(src, &label, dst) {
                            b.lts.push(Transition { src, label, dst, branches: out });
                        }
                    }
                }
            }
        }
        depth += 1;
    }
    Ok(b.lts)
}

impl Semantics {
    /// Explore from `entry(args)` with an empty initial state.
    pub fn explore(&self, entry: &str, args: &[Value], limits: Limits) -> Result<Lts, SemanticsError> {
        explore(self, self.initial_config(entry, args)?, limits)
    }
}
