//! Probabilistic branching bisimilarity and strong bisimulation.

mod conditions;
mod context;
mod partition;
mod process;
mod refine;
mod witness;

pub use conditions::verify_branching;
pub use context::{context_regression, standard_contexts, Context, ContextResult};
pub use partition::{mu, mu_blocks, weak_closure, Partition};
pub use process::{check_full_equiv, check_process_equiv, EquivConfig, ProcessVerdict, SigmaResult};
pub use refine::{is_stable, refine, Relation};
pub use witness::{find_witness, visible, Mismatch, Side, Witness};

use crate::lang::Diagnostics;
use crate::semantics::{Lts, SemanticsError};

/// Default numerical tolerance for probabilities and densities.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Clone, Debug, thiserror::Error)]
pub enum BisimError {
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
    #[error("{0}")]
    Program(Diagnostics),
    #[error("interfaces differ: {0}")]
    Interface(String),
    #[error("`{0}` has free bit parameters; use full equivalence to range over them")]
    FreeBits(String),
    #[error("state space of `{0}` exceeds the exploration limit")]
    Truncated(String),
}

/// Outcome of comparing two states of one LTS.
#[derive(Clone, Debug)]
pub struct Verdict {
    pub equivalent: bool,
    pub partition: Partition,
    pub witness: Option<Witness>,
    pub caveats: Vec<String>,
}

fn check(lts: &Lts, s: usize, t: usize, relation: Relation, tol: f64) -> Verdict {
    let partition = refine(lts, relation, tol);
    let equivalent = partition.same(s, t);
    let witness = (!equivalent).then(|| find_witness(lts, s, t, relation, tol));
    Verdict { equivalent, partition, witness, caveats: vec![format!("probabilities and densities compared with tolerance {tol:e}")] }
}

/// Decides `s ≈ t` for probabilistic branching bisimilarity.
pub fn check_pbb(lts: &Lts, s: usize, t: usize, tol: f64) -> Verdict {
    check(lts, s, t, Relation::Branching, tol)
}

/// Decides strong bisimilarity, where τ steps, output branches with their
/// environment densities, and probabilistic steps must all be matched
/// one-for-one.
pub fn check_strong_bisim(lts: &Lts, s: usize, t: usize, tol: f64) -> Verdict {
    check(lts, s, t, Relation::Strong, tol)
}

#[cfg(test)]
mod tests;
