use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::lang::{replace, Binder, Expr, Process, Program, Type, Value};
use crate::qstate::QuantumState;

use super::canon::{canonicalize, placeholder, placeholder_index, referenced_channels};
use super::config::{Component, Configuration, Mixture, ProbBranch};
use super::policy::{InputPolicy, PolicyKind, PolicyState};
use super::{Options, SemanticsError};

/// A value supplied by the environment on an input.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(untagged)]
pub enum InputValue {
    Bit(bool),
    /// Names the policy state, not the fresh qubit.
    Qubit(String),
    Chan(String),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Label {
    Tau,
    /// `c!V` with the distinct classical value vectors `V` (sorted) and the
    /// qubits sent.
    Output { channel: String, values: Vec<Vec<Value>>, qubits: Vec<String> },
    Input { channel: String, values: Vec<InputValue> },
    Prob(f64),
}

impl Label {
    pub fn is_tau(&self) -> bool {
        matches!(self, Label::Tau)
    }
}

impl fmt::Display for InputValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InputValue::Bit(b) => write!(f, "{}", u8::from(*b)),
            InputValue::Qubit(s) | InputValue::Chan(s) => write!(f, "{s}"),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Tau => write!(f, "τ"),
            Label::Output { channel, values, qubits } => {
                write!(f, "{channel}!")?;
                let show = |v: &[Value]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
                if values.len() > 1 || values.first().is_some_and(|v| !v.is_empty()) {
                    let vs: Vec<String> = values.iter().map(|v| format!("[{}]", show(v))).collect();
                    write!(f, "{{{}}}", vs.join(","))?;
                }
                if !qubits.is_empty() {
                    write!(f, "[{}]", qubits.join(","))?;
                }
                Ok(())
            }
            Label::Input { channel, values } => {
                let vs: Vec<String> = values.iter().map(|v| v.to_string()).collect();
                write!(f, "{channel}?[{}]", vs.join(","))
            }
            Label::Prob(p) => write!(f, "~{p:.6}"),
        }
    }
}

/// Branches of a probabilistic configuration.
pub fn prob_branches(c: &Configuration) -> Result<Vec<(f64, Mixture)>, SemanticsError> {
    match c {
        Configuration::Probabilistic(bs) => Ok(bs.iter().map(|b| (b.prob, b.mixture.clone())).collect()),
        Configuration::Mixed(_) => Err(SemanticsError::NotProbabilistic),
    }
}

fn fresh(base: &str, taken: &dyn Fn(&str) -> bool) -> String {
    if !taken(base) {
        return base.to_string();
    }
    (1..).map(|k| format!("{base}#{k}")).find(|n| !taken(n)).expect("unbounded")
}

fn lookup(values: &[bool]) -> impl Fn(&str) -> Option<bool> + '_ {
    move |v| placeholder_index(v).and_then(|k| values.get(k).copied())
}

fn eval_value(e: &Expr, values: &[bool]) -> Result<Value, SemanticsError> {
    match e {
        Expr::Qubit(q) => Ok(Value::Qubit(q.clone())),
        Expr::Chan(c) => Ok(Value::Chan(c.clone())),
        other => other.eval_bit(&lookup(values)).map(Value::Bit).ok_or_else(|| SemanticsError::Eval(other.to_string())),
    }
}

fn qubit_name(e: &Expr) -> Result<String, SemanticsError> {
    match e {
        Expr::Qubit(q) => Ok(q.clone()),
        other => Err(SemanticsError::Eval(other.to_string())),
    }
}

fn chan_name(e: &Expr) -> Result<&str, SemanticsError> {
    match e {
        Expr::Chan(c) => Ok(c),
        other => Err(SemanticsError::Eval(other.to_string())),
    }
}

/// Divide weights by their sum.
fn renormalize(comps: &mut [Component]) -> f64 {
    let total: f64 = comps.iter().map(|c| c.weight).sum();
    for c in comps.iter_mut() {
        c.weight /= total;
    }
    total
}

/// A typechecked program together with the environment's input policy.
#[derive(Clone, Debug)]
pub struct Semantics {
    program: Arc<Program>,
    pub policy: InputPolicy,
    pub options: Options,
}

impl Semantics {
    pub fn new(program: Program, policy: InputPolicy, options: Options) -> Self {
        Semantics { program: Arc::new(program), policy, options }
    }

    pub fn program(&self) -> &Program {
        &self.program
    }

    /// `(∅; ∅; entry(args))`.
    pub fn initial_config(&self, entry: &str, args: &[Value]) -> Result<Configuration, SemanticsError> {
        self.instantiate(entry, args, QuantumState::empty(), BTreeSet::new(), Vec::new())
    }

    /// `(σ; ω; entry(args))` with the qubits of σ outside ω in `environment`.
    pub fn instantiate(
        &self,
        entry: &str,
        args: &[Value],
        state: QuantumState,
        owned: BTreeSet<String>,
        environment: Vec<String>,
    ) -> Result<Configuration, SemanticsError> {
        let def = self.program.get(entry).ok_or_else(|| SemanticsError::UnknownEntry(entry.to_string()))?;
        if def.params.len() != args.len() {
            return Err(SemanticsError::Arity { name: entry.to_string(), expected: def.params.len(), found: args.len() });
        }
        for (p, a) in def.params.iter().zip(args) {
            let ok = match (&p.ty, a) {
                (Type::Qbit, Value::Qubit(q)) => owned.contains(q),
                (Type::Bit, Value::Bit(_)) => true,
                (Type::Chan(_), Value::Chan(_)) => true,
                _ => false,
            };
            if !ok {
                return Err(SemanticsError::Eval(format!("argument `{a}` for parameter `{}` of `{entry}`", p.name)));
            }
        }
        let map: HashMap<String, Expr> = def.params.iter().zip(args).map(|(p, a)| (p.name.clone(), a.to_expr())).collect();
        let body = replace(&def.body, &map);
        let mut m = Mixture::pure(state, vec![body]);
        m.owned = owned;
        m.environment = environment;
        self.finish(Configuration::Mixed(m))
    }

    /// Flatten parallel compositions, open restrictions with fresh names and
    /// unfold invocations.
    fn open_threads(&self, m: &mut Mixture) -> Result<(), SemanticsError> {
        let mut used: BTreeSet<String> = referenced_channels(&m.threads);
        used.extend(m.restricted.iter().cloned());
        let mut pending: Vec<Process> = std::mem::take(&mut m.threads);
        pending.reverse();
        let mut out = Vec::new();
        while let Some(p) = pending.pop() {
            match p {
                Process::Nil => {}
                Process::Parallel(a, b) => {
                    pending.push(*b);
                    pending.push(*a);
                }
                Process::New { names, cont, .. } => {
                    let mut map = HashMap::new();
                    for (n, _) in &names {
                        let f = fresh(n, &|c| used.contains(c));
                        used.insert(f.clone());
                        m.restricted.insert(f.clone());
                        map.insert(n.clone(), Expr::Chan(f));
                    }
                    pending.push(replace(&cont, &map));
                }
                Process::Invoke { name, args, .. } => {
                    let def = self.program.get(&name).ok_or_else(|| SemanticsError::UnknownEntry(name.clone()))?;
                    if def.params.len() != args.len() {
                        return Err(SemanticsError::Arity { name, expected: def.params.len(), found: args.len() });
                    }
                    let map = def.params.iter().zip(args).map(|(p, a)| (p.name.clone(), a)).collect();
                    pending.push(replace(&def.body, &map));
                }
                other => out.push(other),
            }
        }
        m.threads = out;
        Ok(())
    }

    fn finish_mixture(&self, mut m: Mixture) -> Result<Mixture, SemanticsError> {
        self.open_threads(&mut m)?;
        Ok(m)
    }

    fn finish(&self, c: Configuration) -> Result<Configuration, SemanticsError> {
        let c = match c {
            Configuration::Mixed(m) => Configuration::Mixed(self.finish_mixture(m)?),
            Configuration::Probabilistic(bs) => Configuration::Probabilistic(
                bs.into_iter()
                    .map(|b| Ok(ProbBranch { mixture: self.finish_mixture(b.mixture)?, ..b }))
                    .collect::<Result<_, SemanticsError>>()?,
            ),
        };
        let c = canonicalize(c);
        if cfg!(debug_assertions) {
            if let Err(e) = c.check_invariants() {
                panic!("invariant violated: {e}\n{c}");
            }
        }
        Ok(c)
    }

    fn with_thread(m: &Mixture, i: usize, t: Process) -> Mixture {
        let mut m2 = m.clone();
        m2.threads[i] = t;
        m2
    }

    /// All one-step derivatives of a non-probabilistic configuration.
    pub fn transitions(&self, c: &Configuration) -> Result<Vec<(Label, Configuration)>, SemanticsError> {
        match c {
            Configuration::Mixed(m) => self.mixture_transitions(m),
            Configuration::Probabilistic(_) => Ok(Vec::new()),
        }
    }

    fn mixture_transitions(&self, m: &Mixture) -> Result<Vec<(Label, Configuration)>, SemanticsError> {
        let mut out = Vec::new();
        for (i, t) in m.threads.iter().enumerate() {
            match t {
                Process::Alloc { names, cont, .. } => out.push((Label::Tau, self.alloc(m, i, names, cont)?)),
                Process::Action { targets, unitary, cont, .. } => {
                    let names = targets.iter().map(qubit_name).collect::<Result<Vec<_>, _>>()?;
                    let mut m2 = Self::with_thread(m, i, (**cont).clone());
                    for c in &mut m2.components {
                        c.state = c.state.apply_gate(unitary, &names, &lookup(&c.values))?;
                    }
                    out.push((Label::Tau, self.finish(Configuration::Mixed(m2))?));
                }
                Process::Output { chan, args, cont, span } => {
                    if let Some(a) = args.iter().position(Expr::contains_measure) {
                        out.push((Label::Tau, self.measure(m, i, chan, args, a, cont, *span)?));
                        continue;
                    }
                    let c = chan_name(chan)?;
                    let private = m.restricted.contains(c);
                    if private || self.options.open_system {
                        for (j, u) in m.threads.iter().enumerate() {
                            if let Process::Input { chan: ch2, binders, cont: cont2, .. } = u {
                                if j != i && chan_name(ch2)? == c {
                                    out.push((Label::Tau, self.sync(m, (i, args, cont), (j, binders, cont2))?));
                                }
                            }
                        }
                    }
                    if !private {
                        out.push(self.output(m, i, c, args, cont)?);
                    }
                }
                Process::Input { chan, binders, cont, .. } => {
                    let c = chan_name(chan)?;
                    if !m.restricted.contains(c) {
                        out.extend(self.input(m, i, c, binders, cont)?);
                    }
                }
                _ => {}
            }
        }
        Ok(out)
    }

    fn alloc(&self, m: &Mixture, i: usize, names: &[String], cont: &Process) -> Result<Configuration, SemanticsError> {
        let mut taken: BTreeSet<String> = m.qubits().iter().cloned().collect();
        let mut map = HashMap::new();
        let mut fresh_names = Vec::new();
        for n in names {
            let f = fresh(n, &|q| taken.contains(q));
            taken.insert(f.clone());
            map.insert(n.clone(), Expr::Qubit(f.clone()));
            fresh_names.push(f);
        }
        let mut m2 = Self::with_thread(m, i, replace(cont, &map));
        for c in &mut m2.components {
            c.state = c.state.extend_with_fresh(&fresh_names)?;
        }
        m2.owned.extend(fresh_names);
        self.finish(Configuration::Mixed(m2))
    }

    #[allow(clippy::too_many_arguments)]
    fn measure(
        &self,
        m: &Mixture,
        i: usize,
        chan: &Expr,
        args: &[Expr],
        a: usize,
        cont: &Process,
        span: crate::lang::Span,
    ) -> Result<Configuration, SemanticsError> {
        let Expr::Measure(qs) = &args[a] else {
            return Err(SemanticsError::Eval(args[a].to_string()));
        };
        let names = qs.iter().map(qubit_name).collect::<Result<Vec<_>, _>>()?;
        let n = m.placeholders();
        let mut new_args = args[..a].to_vec();
        new_args.extend((0..names.len()).map(|k| placeholder(n + k)));
        new_args.extend(args[a + 1..].iter().cloned());
        let thread = Process::Output { chan: chan.clone(), args: new_args, cont: Box::new(cont.clone()), span };
        let base = Self::with_thread(m, i, thread);

        let mut comps = Vec::new();
        for c in &m.components {
            for br in c.state.measure(&names)? {
                let mut values = c.values.clone();
                values.extend(&br.outcome);
                comps.push((br.outcome, Component { weight: c.weight * br.weight, state: br.post_state, values }));
            }
        }
        if !self.options.eager_collapse {
            let mut m2 = base;
            m2.components = comps.into_iter().map(|(_, c)| c).collect();
            renormalize(&mut m2.components);
            return self.finish(Configuration::Mixed(m2));
        }
        let total: f64 = comps.iter().map(|(_, c)| c.weight).sum();
        let mut groups: BTreeMap<Vec<bool>, Vec<Component>> = BTreeMap::new();
        for (o, c) in comps {
            groups.entry(o).or_default().push(c);
        }
        let branches = groups
            .into_iter()
            .map(|(o, mut cs)| {
                let p = renormalize(&mut cs) / total;
                let mut mix = base.clone();
                mix.components = cs;
                ProbBranch { prob: p, values: o.into_iter().map(Value::Bit).collect(), mixture: mix }
            })
            .collect();
        self.finish(Configuration::Probabilistic(branches))
    }

    fn sync(
        &self,
        m: &Mixture,
        (i, args, cont_out): (usize, &[Expr], &Process),
        (j, binders, cont_in): (usize, &[Binder], &Process),
    ) -> Result<Configuration, SemanticsError> {
        if args.len() != binders.len() {
            return Err(SemanticsError::Arity { name: m.threads[i].to_string(), expected: binders.len(), found: args.len() });
        }
        let mut m2 = m.clone();
        let mut map = HashMap::new();
        for (arg, b) in args.iter().zip(binders) {
            if b.is_wildcard() {
                continue;
            }
            let e = match arg {
                Expr::Qubit(_) | Expr::Chan(_) => arg.clone(),
                Expr::Var(v) if placeholder_index(v).is_some() => arg.clone(),
                _ => {
                    let vals = m2
                        .components
                        .iter()
                        .map(|c| arg.eval_bit(&lookup(&c.values)).ok_or_else(|| SemanticsError::Eval(arg.to_string())))
                        .collect::<Result<Vec<bool>, _>>()?;
                    if vals.iter().all(|v| *v == vals[0]) {
                        Expr::Bit(vals[0])
                    } else {
                        let k = m2.placeholders();
                        for (c, v) in m2.components.iter_mut().zip(vals) {
                            c.values.push(v);
                        }
                        placeholder(k)
                    }
                }
            };
            map.insert(b.name.clone(), e);
        }
        m2.threads[i] = cont_out.clone();
        m2.threads[j] = replace(cont_in, &map);
        self.finish(Configuration::Mixed(m2))
    }

    fn output(
        &self,
        m: &Mixture,
        i: usize,
        c: &str,
        args: &[Expr],
        cont: &Process,
    ) -> Result<(Label, Configuration), SemanticsError> {
        let qubits: Vec<String> = args
            .iter()
            .filter_map(|a| if let Expr::Qubit(q) = a { Some(q.clone()) } else { None })
            .collect();
        let classical: Vec<&Expr> = args.iter().filter(|a| !matches!(a, Expr::Qubit(_))).collect();
        let mut groups: BTreeMap<Vec<Value>, Vec<Component>> = BTreeMap::new();
        for comp in &m.components {
            let v = classical.iter().map(|e| eval_value(e, &comp.values)).collect::<Result<Vec<_>, _>>()?;
            groups.entry(v).or_default().push(comp.clone());
        }
        let mut base = Self::with_thread(m, i, cont.clone());
        for q in &qubits {
            base.owned.remove(q);
            base.environment.push(q.clone());
        }
        for e in &classical {
            if let Expr::Chan(ch) = e {
                base.restricted.remove(ch);
            }
        }
        let label = Label::Output { channel: c.to_string(), values: groups.keys().cloned().collect(), qubits };
        let branches = groups
            .into_iter()
            .map(|(values, mut cs)| {
                let prob = renormalize(&mut cs);
                let mut mix = base.clone();
                mix.components = cs;
                ProbBranch { prob, values, mixture: mix }
            })
            .collect();
        Ok((label, self.finish(Configuration::Probabilistic(branches))?))
    }

    fn input(
        &self,
        m: &Mixture,
        i: usize,
        c: &str,
        binders: &[Binder],
        cont: &Process,
    ) -> Result<Vec<(Label, Configuration)>, SemanticsError> {
        #[derive(Clone)]
        enum Choice<'a> {
            Bit(bool),
            Qubit(&'a PolicyState),
            Chan,
        }
        let mut combos: Vec<Vec<Choice>> = vec![Vec::new()];
        for b in binders {
            let options: Vec<Choice> = match &b.ty {
                Type::Bit => self.policy.bit_values.iter().map(|v| Choice::Bit(*v)).collect(),
                Type::Qbit => self.policy.qubit_states.iter().map(Choice::Qubit).collect(),
                Type::Chan(_) => vec![Choice::Chan],
            };
            combos = combos
                .into_iter()
                .flat_map(|prefix| {
                    options.iter().map(move |o| {
                        let mut p = prefix.clone();
                        p.push(o.clone());
                        p
                    })
                })
                .collect();
        }
        let mut out = Vec::new();
        for combo in combos {
            let mut m2 = m.clone();
            let mut map = HashMap::new();
            let mut values = Vec::new();
            for (b, choice) in binders.iter().zip(combo) {
                let e = match choice {
                    Choice::Bit(v) => {
                        values.push(InputValue::Bit(v));
                        Expr::Bit(v)
                    }
                    Choice::Chan => {
                        let mut used = referenced_channels(&m2.threads);
                        used.extend(m2.restricted.iter().cloned());
                        used.extend(map.values().filter_map(|e: &Expr| match e {
                            Expr::Chan(c) => Some(c.clone()),
                            _ => None,
                        }));
                        let name = fresh("ext", &|n| used.contains(n));
                        values.push(InputValue::Chan(name.clone()));
                        Expr::Chan(name)
                    }
                    Choice::Qubit(ps) => {
                        values.push(InputValue::Qubit(ps.name.clone()));
                        let base = if b.is_wildcard() { "in" } else { b.name.as_str() };
                        let taken: BTreeSet<String> = m2.qubits().iter().cloned().collect();
                        let name = fresh(base, &|q| taken.contains(q));
                        let added = match ps.kind {
                            PolicyKind::Pure(alpha, beta) => QuantumState::single(&name, alpha, beta)?,
                            PolicyKind::Bell => {
                                let r = fresh("ref", &|q| taken.contains(q) || q == name);
                                let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
                                let z = Complex64::new(0.0, 0.0);
                                m2.environment.push(r.clone());
                                QuantumState::new(vec![name.clone(), r], vec![h, z, z, h])?
                            }
                        };
                        for comp in &mut m2.components {
                            comp.state = comp.state.tensor(&added)?;
                        }
                        m2.owned.insert(name.clone());
                        Expr::Qubit(name)
                    }
                };
                if !b.is_wildcard() {
                    map.insert(b.name.clone(), e);
                }
            }
            m2.threads[i] = replace(cont, &map);
            let label = Label::Input { channel: c.to_string(), values };
            out.push((label, self.finish(Configuration::Mixed(m2))?));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{load_program, parse_process};

    fn sem(src: &str) -> Semantics {
        Semantics::new(load_program(src).unwrap(), InputPolicy::tomographic(), Options::default())
    }

    fn mixture(c: &Configuration) -> &Mixture {
        c.as_mixture().expect("mixed")
    }

    /// A pure configuration over `state` whose term is `term` with free
    /// qubit and channel variables turned into runtime names.
    fn from_term(s: &Semantics, state: QuantumState, term: &str) -> Configuration {
        let p = parse_process(term).unwrap();
        let fv = crate::lang::free_names(&p, None);
        let mut map: HashMap<String, Expr> = fv.channels.iter().map(|c| (c.clone(), Expr::Chan(c.clone()))).collect();
        map.extend(state.qubits().iter().map(|q| (q.clone(), Expr::Qubit(q.clone()))));
        let mut m = Mixture::pure(state.clone(), vec![replace(&p, &map)]);
        m.owned = state.qubits().iter().cloned().collect();
        s.finish(Configuration::Mixed(m)).unwrap()
    }

    #[test]
    fn identity_initial_state() {
        let s = sem("process Identity(a:^[Qbit], d:^[Qbit]) = a?[x:Qbit].d![x].0");
        let c = s.initial_config("Identity", &[Value::Chan("a".into()), Value::Chan("d".into())]).unwrap();
        assert_eq!(mixture(&c).term(), "a?[x:Qbit].d![x].0");
        assert!(mixture(&c).is_pure());
        let ts = s.transitions(&c).unwrap();
        assert_eq!(ts.len(), 4);
        assert!(matches!(&ts[0].0, Label::Input { channel, .. } if channel == "a"));
    }

    #[test]
    fn wrong_arity() {
        let s = sem("process Identity(a:^[Qbit], d:^[Qbit]) = a?[x:Qbit].d![x].0");
        assert!(matches!(
            s.initial_config("Identity", &[Value::Chan("a".into())]),
            Err(SemanticsError::Arity { .. })
        ));
        assert!(matches!(s.initial_config("Nope", &[]), Err(SemanticsError::UnknownEntry(_))));
    }

    #[test]
    fn measurement_gives_mixture_then_output_distribution() {
        let s = sem("process Dummy() = 0");
        let q = QuantumState::single("q", Complex64::new(0.6, 0.0), Complex64::new(0.8, 0.0)).unwrap();
        let c0 = from_term(&s, q, "c![measure q].0");
        let ts = s.transitions(&c0).unwrap();
        assert_eq!(ts.len(), 1);
        assert!(ts[0].0.is_tau());
        let mix = mixture(&ts[0].1);
        assert_eq!(mix.components.len(), 2);
        assert!((mix.components[0].weight - 0.36).abs() < 1e-12);
        assert!((mix.components[1].weight - 0.64).abs() < 1e-12);
        assert_eq!(mix.term(), "λ$0.(c![$0].0)");

        let ts = s.transitions(&ts[0].1).unwrap();
        assert_eq!(ts.len(), 1);
        let Label::Output { values, qubits, .. } = &ts[0].0 else { panic!() };
        assert_eq!(values, &vec![vec![Value::Bit(false)], vec![Value::Bit(true)]]);
        assert!(qubits.is_empty());
        let bs = prob_branches(&ts[0].1).unwrap();
        assert!((bs[0].0 - 0.36).abs() < 1e-12 && (bs[1].0 - 0.64).abs() < 1e-12);
        assert!(bs.iter().all(|(_, m)| m.is_pure()));
    }

    #[test]
    fn internal_communication_keeps_mixture() {
        let s = sem("process Dummy() = 0");
        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        let q = QuantumState::single("q", h, h).unwrap();
        let c0 = from_term(&s, q, "(new c)(c![measure q].0 || c?[y:bit].e![y].0)");
        let c1 = &s.transitions(&c0).unwrap()[0].1;
        assert_eq!(mixture(c1).components.len(), 2);
        let ts = s.transitions(c1).unwrap();
        let (l, c2) = ts.iter().find(|(l, _)| l.is_tau()).unwrap();
        assert!(l.is_tau());
        let m2 = mixture(c2);
        assert_eq!(m2.components.len(), 2);
        assert_eq!(m2.term(), "λ$0.(e![$0].0)");
        assert!(m2.restricted.is_empty());
    }

    #[test]
    fn eager_collapse_splits_on_measurement() {
        let mut s = sem("process Dummy() = 0");
        s.options.eager_collapse = true;
        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        let c0 = from_term(&s, QuantumState::single("q", h, h).unwrap(), "c![measure q].0");
        let ts = s.transitions(&c0).unwrap();
        assert!(ts[0].0.is_tau());
        let bs = prob_branches(&ts[0].1).unwrap();
        assert_eq!(bs.len(), 2);
        assert_eq!(bs[0].1.term(), "c![0].0");
    }

    #[test]
    fn qubit_output_moves_to_environment() {
        let s = sem("process Send(c:^[Qbit]) = (qbit q).{q*=H}.c![q].0",
        );
        let c0 = s.initial_config("Send", &[Value::Chan("c".into())]).unwrap();
        let c1 = &s.transitions(&c0).unwrap()[0].1;
        let c2 = &s.transitions(c1).unwrap()[0].1;
        let ts = s.transitions(c2).unwrap();
        let Label::Output { qubits, values, .. } = &ts[0].0 else { panic!() };
        assert_eq!(qubits, &vec!["q".to_string()]);
        assert_eq!(values, &vec![Vec::<Value>::new()]);
        let m = mixture(&ts[0].1);
        assert!(m.owned.is_empty());
        assert_eq!(m.environment, vec!["q".to_string()]);
        let rho = m.env_density();
        assert!((rho.get(0, 1).re - 0.5).abs() < 1e-12);
        assert!(m.is_terminal());
    }

    #[test]
    fn fresh_names_avoid_clashes() {
        let s = sem("process Two() = (qbit q).0 || (qbit q).0");
        let c0 = s.initial_config("Two", &[]).unwrap();
        let c1 = &s.transitions(&c0).unwrap()[0].1;
        let c2 = &s.transitions(c1).unwrap()[0].1;
        assert_eq!(mixture(c2).qubits(), ["q", "q#1"]);
    }

    #[test]
    fn conditional_gate_uses_component_values() {
        let s = sem("process C(d:^[Qbit]) = (qbit p, r).{p*=H}.(new m)(m![measure p].0 || m?[j:bit].{r*=X^j}.d![r].0)",
        );
        let mut c = s.initial_config("C", &[Value::Chan("d".into())]).unwrap();
        loop {
            let ts = s.transitions(&c).unwrap();
            match ts.iter().find(|(l, _)| l.is_tau()) {
                Some((_, n)) => c = n.clone(),
                None => break,
            }
        }
        let m = mixture(&c);
        assert_eq!(m.components.len(), 2);
        let rho = m.density(&["r".into()]).unwrap();
        assert!((rho.get(0, 0).re - 0.5).abs() < 1e-12 && rho.get(0, 1).norm() < 1e-12);
        assert_eq!(m.placeholders(), 0);
    }
}
