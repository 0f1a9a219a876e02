use std::collections::{BTreeMap, BTreeSet};

use crate::lang::Value;
use crate::semantics::{InputValue, Label, Lts, StateKind};

use super::partition::{DensityIds, Partition, RealIds};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    /// Probabilistic branching bisimilarity.
    Branching,
    /// Strong bisimulation: every step, τ included, must be matched exactly.
    Strong,
}

/// One output branch as seen by the signature: values, probability id,
/// environment density id and target block.
pub(crate) type BranchKey = (Vec<Value>, usize, usize, usize);

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub(crate) enum Move {
    Tau(usize),
    Input { channel: String, values: Vec<InputValue>, block: usize },
    Output { channel: String, branches: Vec<BranchKey> },
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub(crate) struct Signature {
    pub block: usize,
    pub moves: Vec<Move>,
    /// `μ(s, D)` per block, probabilities as ids.
    pub mu: Vec<(usize, usize)>,
}

/// Output branches with probabilities and environment densities replaced by
/// ids; targets are still state ids.
struct StaticOutput {
    channel: String,
    branches: Vec<(Vec<Value>, usize, usize, usize)>,
}

pub(crate) struct Refiner<'a> {
    lts: &'a Lts,
    relation: Relation,
    probs: RealIds,
    outputs: Vec<Option<StaticOutput>>,
}

impl<'a> Refiner<'a> {
    pub fn new(lts: &'a Lts, relation: Relation, tol: f64) -> Self {
        let mut probs = RealIds::new(tol);
        let mut dens = DensityIds::new(tol);
        let mut rho: BTreeMap<usize, usize> = BTreeMap::new();
        let outputs = lts
            .transitions()
            .iter()
            .map(|t| {
                let Label::Output { channel, .. } = &t.label else { return None };
                let branches = t
                    .branches
                    .iter()
                    .map(|b| {
                        let r = *rho.entry(b.target).or_insert_with(|| {
                            let d = lts.env_density(b.target).expect("branch targets are not probabilistic");
                            dens.id(&d)
                        });
                        (b.values.clone(), probs.id(b.prob), r, b.target)
                    })
                    .collect();
                Some(StaticOutput { channel: channel.clone(), branches })
            })
            .collect();
        Refiner { lts, relation, probs, outputs }
    }

    /// States reachable from `s` by τ steps into non-probabilistic states of
    /// the same block.
    fn inert_closure(&self, part: &Partition, s: usize) -> BTreeSet<usize> {
        let mut seen = BTreeSet::from([s]);
        if self.relation == Relation::Strong {
            return seen;
        }
        let mut stack = vec![s];
        while let Some(u) = stack.pop() {
            for t in self.lts.outgoing(u) {
                if t.label.is_tau()
                    && self.lts.kind(t.dst) == StateKind::Nondeterministic
                    && part.same(t.dst, s)
                    && seen.insert(t.dst)
                {
                    stack.push(t.dst);
                }
            }
        }
        seen
    }

    pub fn signature(&mut self, part: &Partition, s: usize) -> Signature {
        let block = part.block(s);
        let mut moves = BTreeSet::new();
        if self.lts.kind(s) == StateKind::Nondeterministic {
            for u in self.inert_closure(part, s) {
                for &i in self.lts.outgoing_ids(u) {
                    let t = &self.lts.transitions()[i];
                    let dst = t.dst;
                    match &t.label {
                        Label::Tau => {
                            if self.relation == Relation::Strong || !part.same(dst, s) {
                                moves.insert(Move::Tau(part.block(dst)));
                            }
                        }
                        Label::Input { channel, values } => {
                            moves.insert(Move::Input { channel: channel.clone(), values: values.clone(), block: part.block(dst) });
                        }
                        Label::Output { .. } => {
                            let o = self.outputs[i].as_ref().expect("output table");
                            let mut branches: Vec<BranchKey> = o
                                .branches
                                .iter()
                                .map(|(v, p, r, target)| (v.clone(), *p, *r, part.block(*target)))
                                .collect();
                            branches.sort();
                            moves.insert(Move::Output { channel: o.channel.clone(), branches });
                        }
                        Label::Prob(_) => {}
                    }
                }
            }
        }
        let mu = super::partition::mu_blocks(self.lts, s, part)
            .into_iter()
            .map(|(b, p)| (b, self.probs.id(p)))
            .collect();
        Signature { block, moves: moves.into_iter().collect(), mu }
    }

    pub fn round(&mut self, part: &Partition) -> Partition {
        let sigs: Vec<Signature> = (0..self.lts.len()).map(|s| self.signature(part, s)).collect();
        Partition::from_keys(&sigs)
    }

    /// Refine from the coarsest partition until stable; returns every
    /// intermediate partition, the last one being the fixpoint.
    pub fn run(&mut self) -> Vec<Partition> {
        let mut history = vec![Partition::coarsest(self.lts.len())];
        loop {
            let cur = history.last().expect("non-empty");
            let next = self.round(cur);
            if next.num_blocks() == cur.num_blocks() {
                return history;
            }
            history.push(next);
        }
    }
}

/// The coarsest stable partition for `relation`.
pub fn refine(lts: &Lts, relation: Relation, tol: f64) -> Partition {
    Refiner::new(lts, relation, tol).run().pop().expect("non-empty")
}

/// Whether one more refinement round leaves `part` unchanged.
pub fn is_stable(lts: &Lts, part: &Partition, relation: Relation, tol: f64) -> bool {
    Refiner::new(lts, relation, tol).round(part).num_blocks() == part.num_blocks()
}
