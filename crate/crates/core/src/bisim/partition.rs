use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::qstate::DensityMatrix;
use crate::semantics::{Label, Lts, StateKind};

/// Disjoint blocks covering every state of an LTS.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Partition {
    block_of: Vec<usize>,
    count: usize,
}

impl Partition {
    /// Everything in one block.
    pub fn coarsest(n: usize) -> Self {
        Partition { block_of: vec![0; n], count: usize::from(n > 0) }
    }

    /// Blocks numbered by first occurrence of each key, in state order.
    pub fn from_keys<K: Ord + Clone>(keys: &[K]) -> Self {
        let mut ids: BTreeMap<K, usize> = BTreeMap::new();
        let mut block_of = Vec::with_capacity(keys.len());
        for k in keys {
            let next = ids.len();
            block_of.push(*ids.entry(k.clone()).or_insert(next));
        }
        Partition { count: ids.len(), block_of }
    }

    pub fn block(&self, s: usize) -> usize {
        self.block_of[s]
    }

    pub fn same(&self, s: usize, t: usize) -> bool {
        self.block_of[s] == self.block_of[t]
    }

    pub fn num_blocks(&self) -> usize {
        self.count
    }

    pub fn len(&self) -> usize {
        self.block_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.block_of.is_empty()
    }

    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.count];
        for (s, b) in self.block_of.iter().enumerate() {
            out[*b].push(s);
        }
        out
    }

    /// Every block of `self` lies inside a block of `coarser`.
    pub fn refines(&self, coarser: &Partition) -> bool {
        let mut image: BTreeMap<usize, usize> = BTreeMap::new();
        self.block_of
            .iter()
            .zip(&coarser.block_of)
            .all(|(a, b)| *image.entry(*a).or_insert(*b) == *b)
    }
}

/// `μ(s, t)`: the probability of `s ~π~> t`, 1 for `s = t ∈ S_n`, else 0.
pub fn mu(lts: &Lts, s: usize, t: usize) -> f64 {
    match lts.kind(s) {
        StateKind::Nondeterministic => f64::from(u8::from(s == t)),
        StateKind::Probabilistic => lts
            .outgoing(s)
            .filter(|e| e.dst == t)
            .map(|e| if let Label::Prob(p) = e.label { p } else { 0.0 })
            .sum(),
    }
}

/// `μ(s, D)` for every block `D` with non-zero mass.
pub fn mu_blocks(lts: &Lts, s: usize, part: &Partition) -> BTreeMap<usize, f64> {
    let mut out = BTreeMap::new();
    match lts.kind(s) {
        StateKind::Nondeterministic => {
            out.insert(part.block(s), 1.0);
        }
        StateKind::Probabilistic => {
            for e in lts.outgoing(s) {
                if let Label::Prob(p) = e.label {
                    *out.entry(part.block(e.dst)).or_insert(0.0) += p;
                }
            }
        }
    }
    out
}

/// States reachable from `s` by zero or more τ steps into `S_n`.
pub fn weak_closure(lts: &Lts, s: usize) -> BTreeSet<usize> {
    let mut seen = BTreeSet::from([s]);
    let mut stack = vec![s];
    while let Some(u) = stack.pop() {
        for e in lts.outgoing(u) {
            if e.label.is_tau() && lts.kind(e.dst) == StateKind::Nondeterministic && seen.insert(e.dst) {
                stack.push(e.dst);
            }
        }
    }
    seen
}

/// Assigns ids to reals, treating values within `tol` as equal.
#[derive(Debug)]
pub(crate) struct RealIds {
    tol: f64,
    seen: Vec<f64>,
}

impl RealIds {
    pub fn new(tol: f64) -> Self {
        RealIds { tol, seen: Vec::new() }
    }

    pub fn id(&mut self, x: f64) -> usize {
        if let Some(i) = self.seen.iter().position(|y| (x - y).abs() <= self.tol) {
            return i;
        }
        self.seen.push(x);
        self.seen.len() - 1
    }
}

/// Assigns ids to density matrices, treating matrices within `tol`
/// (entrywise) as equal.
#[derive(Debug)]
pub(crate) struct DensityIds {
    tol: f64,
    seen: Vec<DensityMatrix>,
}

impl DensityIds {
    pub fn new(tol: f64) -> Self {
        DensityIds { tol, seen: Vec::new() }
    }

    pub fn id(&mut self, d: &DensityMatrix) -> usize {
        if let Some(i) = self.seen.iter().position(|e| e.approx_eq(d, self.tol)) {
            return i;
        }
        self.seen.push(d.clone());
        self.seen.len() - 1
    }
}
