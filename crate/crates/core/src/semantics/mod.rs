//! Labelled transition semantics over mixed and probabilistic configurations.

mod canon;
mod config;
mod export;
mod lts;
mod policy;
mod step;
mod trace;

pub use canon::canonicalize;
pub use config::{format_ket, Component, Configuration, Mixture, ProbBranch};
pub use export::{label_json, to_dot, to_json};
pub use lts::{explore, Limits, Lts, LtsState, OutputBranch, StateKind, Transition};
pub use policy::{parse_amplitudes, InputPolicy, PolicyKind, PolicyState};
pub use step::{prob_branches, InputValue, Label, Semantics};
pub use trace::{final_output_density, OutputDensity, TraceStep};

use crate::lang::LangError;
use crate::qstate::QStateError;

/// Switches that change which transitions exist.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Options {
    /// Allow internal synchronization on interface channels.
    pub open_system: bool,
    /// Measurements produce a probability distribution instead of a mixture.
    /// Only meant for regression tests.
    pub eager_collapse: bool,
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum SemanticsError {
    #[error("unknown process `{0}`")]
    UnknownEntry(String),
    #[error("process `{name}` expects {expected} argument(s), got {found}")]
    Arity { name: String, expected: usize, found: usize },
    #[error(transparent)]
    QState(#[from] QStateError),
    #[error(transparent)]
    Lang(#[from] LangError),
    #[error("input policy: {0}")]
    Policy(String),
    #[error("cannot evaluate `{0}`")]
    Eval(String),
    #[error("configuration is not probabilistic")]
    NotProbabilistic,
    #[error("no output on `{channel}` along a path ending in state {state}")]
    MissingOutput { channel: String, state: usize },
    #[error("output on `{0}` carries {1} qubits, expected exactly one")]
    NotSingleQubit(String, usize),
}
