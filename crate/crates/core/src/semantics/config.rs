use std::collections::BTreeSet;
use std::fmt::{self, Write as _};

use num_complex::Complex64;

use crate::lang::{free_names, Process, Value};
use crate::qstate::{mixture_density, DensityMatrix, QStateError, QuantumState};

const KEY_SCALE: f64 = 1e9;
const WEIGHT_TOL: f64 = 1e-9;

/// One summand of a mixture: a weight, a state vector and the values of the
/// mixture's placeholders `$0, $1, ...` in this component.
#[derive(Clone, Debug, PartialEq)]
pub struct Component {
    pub weight: f64,
    pub state: QuantumState,
    pub values: Vec<bool>,
}

/// A mixed configuration `⊕ g_i (σ_i; ω; λx.P <v_i>)`. A pure configuration
/// is a mixture with one component and no placeholders.
///
/// `threads` is the parallel composition with restrictions opened: channels
/// in `restricted` are private, every other channel is part of the interface.
/// `environment` lists the qubits of σ not in ω, in the order they were
/// released.
#[derive(Clone, Debug, PartialEq)]
pub struct Mixture {
    pub components: Vec<Component>,
    pub owned: BTreeSet<String>,
    pub environment: Vec<String>,
    pub restricted: BTreeSet<String>,
    pub threads: Vec<Process>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbBranch {
    pub prob: f64,
    /// The classical values that selected this branch.
    pub values: Vec<Value>,
    pub mixture: Mixture,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Configuration {
    Mixed(Mixture),
    Probabilistic(Vec<ProbBranch>),
}

fn round_key(x: f64) -> i64 {
    (x * KEY_SCALE).round() as i64
}

impl Mixture {
    /// No qubits, no threads.
    pub fn trivial() -> Self {
        Mixture::pure(QuantumState::empty(), Vec::new())
    }

    pub fn pure(state: QuantumState, threads: Vec<Process>) -> Self {
        Mixture {
            components: vec![Component { weight: 1.0, state, values: Vec::new() }],
            owned: BTreeSet::new(),
            environment: Vec::new(),
            restricted: BTreeSet::new(),
            threads,
        }
    }

    pub fn qubits(&self) -> &[String] {
        self.components.first().map(|c| c.state.qubits()).unwrap_or(&[])
    }

    pub fn placeholders(&self) -> usize {
        self.components.first().map_or(0, |c| c.values.len())
    }

    pub fn is_pure(&self) -> bool {
        self.components.len() == 1 && self.placeholders() == 0
    }

    pub fn is_terminal(&self) -> bool {
        self.threads.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.components.iter().map(|c| c.weight).sum()
    }

    /// `ρ^keep` of the mixture.
    pub fn density(&self, keep: &[String]) -> Result<DensityMatrix, QStateError> {
        let parts: Vec<(f64, &QuantumState)> = self.components.iter().map(|c| (c.weight, &c.state)).collect();
        mixture_density(&parts, keep)
    }

    /// `ρ_E`: the reduced density of the environment qubits, in release order.
    pub fn env_density(&self) -> DensityMatrix {
        self.density(&self.environment).expect("environment qubits belong to the state")
    }

    /// The term with placeholders abstracted, e.g. `λ$0.(c![$0].0)`.
    pub fn term(&self) -> String {
        let mut s = String::new();
        if self.placeholders() > 0 {
            let xs: Vec<String> = (0..self.placeholders()).map(|k| format!("${k}")).collect();
            let _ = write!(s, "λ{}.", xs.join(","));
        }
        if !self.restricted.is_empty() {
            let rs: Vec<&str> = self.restricted.iter().map(String::as_str).collect();
            let _ = write!(s, "(new {})", rs.join(", "));
        }
        let body = if self.threads.is_empty() {
            "0".to_string()
        } else {
            self.threads.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(" || ")
        };
        if self.restricted.is_empty() && self.placeholders() == 0 {
            s.push_str(&body);
        } else {
            let _ = write!(s, "({body})");
        }
        s
    }

    /// Interning key. Assumes the mixture is canonical.
    pub fn key(&self) -> String {
        let mut k = String::from("M|");
        for t in &self.threads {
            let _ = write!(k, "{t}\u{1}");
        }
        let _ = write!(k, "|R{:?}|O{:?}|E{:?}|Q{:?}", self.restricted, self.owned, self.environment, self.qubits());
        for c in &self.components {
            let _ = write!(k, "|{}:", round_key(c.weight));
            for a in c.state.amplitudes() {
                let _ = write!(k, "{},{};", round_key(a.re), round_key(a.im));
            }
            for v in &c.values {
                k.push(if *v { '1' } else { '0' });
            }
        }
        k
    }

    /// Structural invariants; returns the first violation.
    pub fn check_invariants(&self) -> Result<(), String> {
        if self.components.is_empty() {
            return Err("mixture has no components".into());
        }
        let total = self.total_weight();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(format!("weights sum to {total}"));
        }
        let qubits = self.qubits();
        let arity = self.placeholders();
        for c in &self.components {
            if c.weight <= 0.0 {
                return Err(format!("non-positive weight {}", c.weight));
            }
            if c.state.qubits() != qubits {
                return Err("components disagree on qubit names".into());
            }
            if c.values.len() != arity {
                return Err("components disagree on placeholder count".into());
            }
            if (c.state.norm() - 1.0).abs() > WEIGHT_TOL {
                return Err(format!("component state has norm {}", c.state.norm()));
            }
        }
        let all: BTreeSet<&String> = qubits.iter().collect();
        let env: BTreeSet<&String> = self.environment.iter().collect();
        if env.len() != self.environment.len() {
            return Err("environment lists a qubit twice".into());
        }
        if self.owned.iter().any(|q| env.contains(q)) {
            return Err("a qubit is both owned and in the environment".into());
        }
        let covered: BTreeSet<&String> = self.owned.iter().chain(&self.environment).collect();
        if covered != all {
            return Err("owned and environment qubits do not partition the state".into());
        }
        for t in &self.threads {
            let fv = free_names(t, None);
            if let Some(q) = fv.qubits.iter().find(|q| !self.owned.contains(*q)) {
                return Err(format!("term refers to qubit `{q}` outside ω"));
            }
            if let Some(v) = fv.variables.iter().find(|v| {
                v.strip_prefix('$').and_then(|k| k.parse::<usize>().ok()).is_none_or(|k| k >= arity)
            }) {
                return Err(format!("unbound variable `{v}` in term"));
            }
        }
        Ok(())
    }
}

impl Configuration {
    pub fn is_probabilistic(&self) -> bool {
        matches!(self, Configuration::Probabilistic(_))
    }

    pub fn as_mixture(&self) -> Option<&Mixture> {
        match self {
            Configuration::Mixed(m) => Some(m),
            Configuration::Probabilistic(_) => None,
        }
    }

    pub fn key(&self) -> String {
        match self {
            Configuration::Mixed(m) => m.key(),
            Configuration::Probabilistic(bs) => {
                let mut k = String::from("P");
                for b in bs {
                    let _ = write!(k, "[{}:{:?}:{}]", round_key(b.prob), b.values, b.mixture.key());
                }
                k
            }
        }
    }

    pub fn check_invariants(&self) -> Result<(), String> {
        match self {
            Configuration::Mixed(m) => m.check_invariants(),
            Configuration::Probabilistic(bs) => {
                let total: f64 = bs.iter().map(|b| b.prob).sum();
                if (total - 1.0).abs() > WEIGHT_TOL {
                    return Err(format!("branch probabilities sum to {total}"));
                }
                if bs.len() > 1 && bs.iter().any(|b| b.prob >= 1.0) {
                    return Err("branch with probability 1 among several".into());
                }
                bs.iter().try_for_each(|b| b.mixture.check_invariants())
            }
        }
    }
}

fn fmt_amp(a: Complex64) -> String {
    let r = |x: f64| if x.abs() < 5e-7 { 0.0 } else { (x * 1e6).round() / 1e6 };
    let a = Complex64::new(r(a.re), r(a.im));
    if a.im == 0.0 {
        format!("{}", a.re)
    } else {
        format!("({})", crate::lang::fmt_complex(a))
    }
}

/// `a|00> + b|11>` with amplitudes rounded to 6 decimals.
pub fn format_ket(s: &QuantumState) -> String {
    let n = s.num_qubits();
    let terms: Vec<String> = s
        .amplitudes()
        .iter()
        .enumerate()
        .filter(|(_, a)| a.norm() > 1e-9)
        .map(|(i, a)| {
            let bits: String = (0..n).map(|j| if i >> (n - 1 - j) & 1 == 1 { '1' } else { '0' }).collect();
            format!("{}|{bits}>", fmt_amp(*a))
        })
        .collect();
    if terms.is_empty() {
        "0".into()
    } else {
        terms.join(" + ")
    }
}

impl fmt::Display for Mixture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "term: {}", self.term())?;
        let owned: Vec<&str> = self.owned.iter().map(String::as_str).collect();
        writeln!(f, "qubits: [{}]  owned: {{{}}}  environment: [{}]", self.qubits().join(","), owned.join(","), self.environment.join(","))?;
        for c in &self.components {
            write!(f, "  {:.6} {}", c.weight, format_ket(&c.state))?;
            if !c.values.is_empty() {
                let vs: Vec<&str> = c.values.iter().map(|v| if *v { "1" } else { "0" }).collect();
                write!(f, " <{}>", vs.join(","))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Configuration::Mixed(m) => write!(f, "{m}"),
            Configuration::Probabilistic(bs) => {
                for b in bs {
                    let vs: Vec<String> = b.values.iter().map(|v| v.to_string()).collect();
                    writeln!(f, "⊞ {:.6} [{}]", b.prob, vs.join(","))?;
                    for line in b.mixture.to_string().lines() {
                        writeln!(f, "    {line}")?;
                    }
                }
                Ok(())
            }
        }
    }
}
