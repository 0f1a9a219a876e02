use std::collections::BTreeSet;
use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::{json, Value as Json};

use crate::lang::{Param, Program, Type, Value};
use crate::qstate::QuantumState;
use crate::semantics::{explore, InputPolicy, Limits, Options, PolicyKind, PolicyState, Semantics};

use super::{check, BisimError, Relation, Witness, DEFAULT_TOL};

#[derive(Clone, Copy, Debug)]
pub struct EquivConfig {
    pub tol: f64,
    pub options: Options,
    pub limits: Limits,
    pub relation: Relation,
}

impl Default for EquivConfig {
    fn default() -> Self {
        EquivConfig { tol: DEFAULT_TOL, options: Options::default(), limits: Limits::default(), relation: Relation::Branching }
    }
}

/// The outcome for one choice of initial inputs.
#[derive(Clone, Debug)]
pub struct SigmaResult {
    /// What was fixed for this run, e.g. `|0>` or `j=1, x=|+>`.
    pub input: String,
    pub equivalent: bool,
    pub witness: Option<Witness>,
    /// Sizes of the two explored systems.
    pub states: (usize, usize),
}

#[derive(Clone, Debug)]
pub struct ProcessVerdict {
    pub equivalent: bool,
    pub sigma_results: Vec<SigmaResult>,
    pub caveats: Vec<String>,
}

impl ProcessVerdict {
    pub fn to_json(&self) -> Json {
        let runs: Vec<Json> = self
            .sigma_results
            .iter()
            .map(|r| {
                let mut o = json!({ "input": r.input, "equivalent": r.equivalent });
                if let Some(w) = &r.witness {
                    o["witness"] = w.to_json();
                }
                o
            })
            .collect();
        json!({ "equivalent": self.equivalent, "sigma_results": runs, "caveats": self.caveats })
    }

    /// The first failing run, if any.
    pub fn first_failure(&self) -> Option<&SigmaResult> {
        self.sigma_results.iter().find(|r| !r.equivalent)
    }
}

#[derive(Clone, Debug)]
struct Run {
    input: String,
    policy: InputPolicy,
    bits: Vec<bool>,
    qubits: Vec<PolicyState>,
}

fn interface(left: &Program, p: &str, right: &Program, q: &str) -> Result<Vec<Param>, BisimError> {
    let unknown = |n: &str| BisimError::Semantics(crate::semantics::SemanticsError::UnknownEntry(n.to_string()));
    let dl = left.get(p).ok_or_else(|| unknown(p))?;
    let dr = right.get(q).ok_or_else(|| unknown(q))?;
    if dl.params.len() != dr.params.len() {
        return Err(BisimError::Interface(format!(
            "`{p}` has {} parameter(s), `{q}` has {}",
            dl.params.len(),
            dr.params.len()
        )));
    }
    for (i, (a, b)) in dl.params.iter().zip(&dr.params).enumerate() {
        if a.ty != b.ty {
            return Err(BisimError::Interface(format!(
                "parameter {} is `{}: {}` in `{p}` but `{}: {}` in `{q}`",
                i + 1,
                a.name,
                a.ty,
                b.name,
                b.ty
            )));
        }
    }
    Ok(dl.params.clone())
}

fn assignments<T: Clone>(choices: &[T], n: usize) -> Vec<Vec<T>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                choices.iter().map(move |c| {
                    let mut v = prefix.clone();
                    v.push(c.clone());
                    v
                })
            })
            .collect();
    }
    out
}

fn runs(params: &[Param], policy: &InputPolicy, full: bool, entry: &str) -> Result<Vec<Run>, BisimError> {
    let bit_names: Vec<&str> = params.iter().filter(|p| p.ty == Type::Bit).map(|p| p.name.as_str()).collect();
    let qubit_names: Vec<&str> = params.iter().filter(|p| p.ty == Type::Qbit).map(|p| p.name.as_str()).collect();
    if !bit_names.is_empty() && !full {
        return Err(BisimError::FreeBits(entry.to_string()));
    }
    let mut out = Vec::new();
    for bits in assignments(&[false, true], bit_names.len()) {
        let mut fixed: Vec<String> =
            bit_names.iter().zip(&bits).map(|(n, b)| format!("{n}={}", u8::from(*b))).collect();
        if qubit_names.is_empty() {
            let single = policy.qubit_states.len() <= 1;
            if !single {
                for (st, sub) in policy.qubit_states.iter().zip(policy.singletons()) {
                    let mut f = fixed.clone();
                    f.push(st.name.clone());
                    out.push(Run { input: f.join(", "), policy: sub, bits: bits.clone(), qubits: Vec::new() });
                }
            }
            fixed.push(policy.to_string());
            out.push(Run { input: fixed.join(", "), policy: policy.clone(), bits, qubits: Vec::new() });
        } else {
            for qs in assignments(&policy.qubit_states, qubit_names.len()) {
                let mut f = fixed.clone();
                f.extend(qubit_names.iter().zip(&qs).map(|(n, s)| format!("{n}={}", s.name)));
                out.push(Run { input: f.join(", "), policy: policy.clone(), bits: bits.clone(), qubits: qs });
            }
        }
    }
    Ok(out)
}

/// Initial state, owned qubits, environment qubits and arguments for a run.
type Setup = (QuantumState, BTreeSet<String>, Vec<String>, Vec<Value>);

fn setup(params: &[Param], run: &Run) -> Result<Setup, BisimError> {
    let mut state = QuantumState::empty();
    let mut owned = BTreeSet::new();
    let mut env = Vec::new();
    let mut args = Vec::new();
    let (mut bits, mut qubits) = (run.bits.iter(), run.qubits.iter());
    let taken: BTreeSet<&str> = params.iter().map(|p| p.name.as_str()).collect();
    for p in params {
        args.push(match &p.ty {
            Type::Chan(_) => Value::Chan(p.name.clone()),
            Type::Bit => Value::Bit(*bits.next().expect("one bit per bit parameter")),
            Type::Qbit => {
                let ps = qubits.next().expect("one state per qubit parameter");
                let added = match ps.kind {
                    PolicyKind::Pure(a, b) => QuantumState::single(&p.name, a, b).map_err(crate::semantics::SemanticsError::from)?,
                    PolicyKind::Bell => {
                        let mut r = format!("ref_{}", p.name);
                        while taken.contains(r.as_str()) {
                            r.push('_');
                        }
                        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
                        let z = Complex64::new(0.0, 0.0);
                        env.push(r.clone());
                        QuantumState::new(vec![p.name.clone(), r], vec![h, z, z, h])
                            .map_err(crate::semantics::SemanticsError::from)?
                    }
                };
                state = state.tensor(&added).map_err(crate::semantics::SemanticsError::from)?;
                owned.insert(p.name.clone());
                Value::Qubit(p.name.clone())
            }
        });
    }
    Ok((state, owned, env, args))
}

fn run_one(
    left: &Program,
    p: &str,
    right: &Program,
    q: &str,
    params: &[Param],
    run: &Run,
    cfg: &EquivConfig,
) -> Result<SigmaResult, BisimError> {
    let (state, owned, env, args) = setup(params, run)?;
    let build = |prog: &Program, entry: &str| -> Result<crate::semantics::Lts, BisimError> {
        let sem = Semantics::new(prog.clone(), run.policy.clone(), cfg.options);
        let init = sem.instantiate(entry, &args, state.clone(), owned.clone(), env.clone())?;
        let lts = explore(&sem, init, cfg.limits)?;
        if lts.truncated {
            return Err(BisimError::Truncated(entry.to_string()));
        }
        Ok(lts)
    };
    let (l, r) = (build(left, p)?, build(right, q)?);
    let (u, off) = l.disjoint_union(&r);
    let v = check(&u, l.initial, r.initial + off, cfg.relation, cfg.tol);
    Ok(SigmaResult { input: run.input.clone(), equivalent: v.equivalent, witness: v.witness, states: (l.len(), r.len()) })
}

fn caveats(policy: &InputPolicy, cfg: &EquivConfig) -> Vec<String> {
    let mut out = vec![format!(
        "inputs are drawn from the finite policy {policy}; states outside it are not explored"
    )];
    if cfg.options.open_system {
        out.push("open system: interface channels may also synchronise internally".into());
    }
    if cfg.options.eager_collapse {
        out.push("eager collapse: measurements branch probabilistically instead of producing a mixture".into());
    }
    if cfg.relation == Relation::Strong {
        out.push("strong bisimulation: internal steps are matched one for one".into());
    }
    out
}

fn compare(
    left: &Program,
    p: &str,
    right: &Program,
    q: &str,
    policy: &InputPolicy,
    cfg: &EquivConfig,
    full: bool,
) -> Result<ProcessVerdict, BisimError> {
    let params = interface(left, p, right, q)?;
    let runs = runs(&params, policy, full, p)?;
    let sigma_results: Vec<SigmaResult> =
        runs.par_iter().map(|r| run_one(left, p, right, q, &params, r, cfg)).collect::<Result<_, _>>()?;
    Ok(ProcessVerdict {
        equivalent: sigma_results.iter().all(|r| r.equivalent),
        sigma_results,
        caveats: caveats(policy, cfg),
    })
}

/// Compares `p` from `left` with `q` from `right`. Parameters are matched by
/// position; channels take the names of `p`'s parameters. Qubit parameters
/// start in every combination of policy states. Bit parameters are rejected.
pub fn check_process_equiv(
    left: &Program,
    p: &str,
    right: &Program,
    q: &str,
    policy: &InputPolicy,
    cfg: &EquivConfig,
) -> Result<ProcessVerdict, BisimError> {
    compare(left, p, right, q, policy, cfg, false)
}

/// Like [`check_process_equiv`] but also ranges over every assignment of the
/// bit parameters.
pub fn check_full_equiv(
    left: &Program,
    p: &str,
    right: &Program,
    q: &str,
    policy: &InputPolicy,
    cfg: &EquivConfig,
) -> Result<ProcessVerdict, BisimError> {
    compare(left, p, right, q, policy, cfg, true)
}
