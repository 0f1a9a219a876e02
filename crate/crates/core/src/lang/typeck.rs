//! Type checking with linear qubit ownership.
//!
//! Each binding gets a type cell. Restricted channels declared without a
//! type start with an empty cell that the first use fills in.

use std::collections::{BTreeSet, HashMap, HashSet};

use num_complex::Complex64;

use super::ast::*;
use super::error::{Diagnostics, LangError};

const UNITARY_TOL: f64 = 1e-9;

/// Check a parsed program. On success returns the program with every
/// restriction annotated by its (possibly inferred) channel type.
pub fn typecheck(program: &Program) -> Result<Program, Diagnostics> {
    let mut errors = recursion_errors(program);
    let mut definitions = Vec::new();
    for def in &program.definitions {
        let mut ck = Checker { program, cells: Vec::new(), sent: HashSet::new(), errors: Vec::new() };
        let mut env = Vec::new();
        let mut seen = HashSet::new();
        for p in &def.params {
            if !seen.insert(p.name.as_str()) {
                ck.errors.push(LangError::TypeMismatch {
                    msg: format!("parameter `{}` is declared twice", p.name),
                    span: def.span,
                });
            }
            check_type(&p.ty, def.span, &mut ck.errors);
            let id = ck.cell(Some(p.ty.clone()));
            env.push((p.name.clone(), id));
        }
        let body = ck.process(&def.body, &mut env, &mut BTreeSet::new());
        errors.extend(ck.errors);
        definitions.push(Definition { body, ..def.clone() });
    }
    if errors.is_empty() {
        Ok(Program { definitions })
    } else {
        Err(Diagnostics(errors))
    }
}

/// Parse and type check in one step.
pub fn load_program(src: &str) -> Result<Program, Diagnostics> {
    typecheck(&super::parse_program(src)?)
}

fn check_type(t: &Type, span: Span, errors: &mut Vec<LangError>) {
    if let Type::Chan(ts) = t {
        if ts.is_empty() {
            errors.push(LangError::TypeMismatch { msg: "channel payload list is empty".into(), span });
        }
        ts.iter().for_each(|t| check_type(t, span, errors));
    }
}

fn invocations(p: &Process, out: &mut Vec<String>) {
    match p {
        Process::Nil => {}
        Process::Output { cont, .. }
        | Process::Input { cont, .. }
        | Process::Action { cont, .. }
        | Process::Alloc { cont, .. }
        | Process::New { cont, .. } => invocations(cont, out),
        Process::Parallel(a, b) => {
            invocations(a, out);
            invocations(b, out);
        }
        Process::Invoke { name, .. } => out.push(name.clone()),
    }
}

fn recursion_errors(program: &Program) -> Vec<LangError> {
    let graph: HashMap<&str, Vec<String>> = program
        .definitions
        .iter()
        .map(|d| {
            let mut calls = Vec::new();
            invocations(&d.body, &mut calls);
            (d.name.as_str(), calls)
        })
        .collect();
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut color: HashMap<&str, u8> = HashMap::new();
    let mut errors = Vec::new();

    fn visit<'a>(
        n: &'a str,
        graph: &'a HashMap<&str, Vec<String>>,
        color: &mut HashMap<&'a str, u8>,
        stack: &mut Vec<&'a str>,
        errors: &mut Vec<LangError>,
    ) {
        color.insert(n, 1);
        stack.push(n);
        for m in graph.get(n).into_iter().flatten() {
            let Some((key, _)) = graph.get_key_value(m.as_str()) else { continue };
            match color.get(key).copied().unwrap_or(0) {
                0 => visit(key, graph, color, stack, errors),
                1 => {
                    let start = stack.iter().position(|s| s == key).unwrap_or(0);
                    let mut cycle: Vec<String> = stack[start..].iter().map(|s| s.to_string()).collect();
                    cycle.push(key.to_string());
                    errors.push(LangError::Recursion { cycle });
                }
                _ => {}
            }
        }
        stack.pop();
        color.insert(n, 2);
    }

    for d in &program.definitions {
        if color.get(d.name.as_str()).copied().unwrap_or(0) == 0 {
            visit(&d.name, &graph, &mut color, &mut Vec::new(), &mut errors);
        }
    }
    errors
}

pub(crate) fn is_unitary(m: &[Vec<Complex64>], tol: f64) -> bool {
    let n = m.len();
    if m.iter().any(|r| r.len() != n) {
        return false;
    }
    for i in 0..n {
        for j in 0..n {
            let dot: Complex64 = (0..n).map(|k| m[i][k] * m[j][k].conj()).sum();
            let want = if i == j { 1.0 } else { 0.0 };
            if (dot - want).norm() > tol {
                return false;
            }
        }
    }
    true
}

struct Checker<'a> {
    program: &'a Program,
    cells: Vec<Option<Type>>,
    sent: HashSet<usize>,
    errors: Vec<LangError>,
}

type Env = Vec<(String, usize)>;

impl Checker<'_> {
    fn cell(&mut self, ty: Option<Type>) -> usize {
        self.cells.push(ty);
        self.cells.len() - 1
    }

    fn mismatch(&mut self, msg: String, span: Span) {
        self.errors.push(LangError::TypeMismatch { msg, span });
    }

    fn lookup(&mut self, env: &Env, name: &str, span: Span) -> Option<usize> {
        match env.iter().rev().find(|(n, _)| n == name) {
            Some(&(_, id)) => {
                if self.sent.contains(&id) {
                    self.errors.push(LangError::QubitAfterSend { name: name.into(), span });
                }
                Some(id)
            }
            None => {
                self.errors.push(LangError::Unbound { name: name.into(), span });
                None
            }
        }
    }

    /// Resolve a variable, recording qubit uses.
    fn use_var(&mut self, env: &Env, name: &str, span: Span, used: &mut BTreeSet<usize>) -> Option<usize> {
        let id = self.lookup(env, name, span)?;
        if self.cells[id] == Some(Type::Qbit) {
            used.insert(id);
        }
        Some(id)
    }

    /// Type of an expression; `None` after an error has been reported.
    fn expr(&mut self, e: &Expr, env: &Env, span: Span, used: &mut BTreeSet<usize>) -> Option<Type> {
        match e {
            Expr::Bit(_) => Some(Type::Bit),
            Expr::Qubit(_) => Some(Type::Qbit),
            Expr::Chan(c) => {
                self.mismatch(format!("runtime channel `{c}` cannot be typed"), span);
                None
            }
            Expr::Var(x) => {
                let id = self.use_var(env, x, span, used)?;
                match &self.cells[id] {
                    Some(t) => Some(t.clone()),
                    None => {
                        self.mismatch(
                            format!("cannot infer the type of channel `{x}`; annotate its restriction"),
                            span,
                        );
                        None
                    }
                }
            }
            Expr::Measure(qs) => {
                if qs.len() != 1 {
                    self.mismatch("a multi-qubit measurement may only appear directly in an output".into(), span);
                }
                self.measure_operands(qs, env, span, used);
                Some(Type::Bit)
            }
            Expr::And(a, b) => {
                self.bit_operand(a, env, span, used);
                self.bit_operand(b, env, span, used);
                Some(Type::Bit)
            }
            Expr::Not(a) => {
                self.bit_operand(a, env, span, used);
                Some(Type::Bit)
            }
        }
    }

    fn bit_operand(&mut self, e: &Expr, env: &Env, span: Span, used: &mut BTreeSet<usize>) {
        if e.contains_measure() {
            self.mismatch("measure may only appear directly in an output".into(), span);
        }
        match self.expr(e, env, span, used) {
            Some(Type::Bit) | None => {}
            Some(t) => self.mismatch(format!("`{e}` has type {t}, expected bit"), span),
        }
    }

    fn measure_operands(&mut self, qs: &[Expr], env: &Env, span: Span, used: &mut BTreeSet<usize>) {
        let mut seen = HashSet::new();
        for q in qs {
            match self.expr(q, env, span, used) {
                Some(Type::Qbit) | None => {}
                Some(t) => self.mismatch(format!("cannot measure `{q}` of type {t}"), span),
            }
            if !seen.insert(q.to_string()) {
                self.errors.push(LangError::DuplicateQubit { name: q.to_string(), span });
            }
        }
    }

    /// Channel cell of an expression in channel position.
    fn chan_cell(&mut self, c: &Expr, env: &Env, span: Span) -> Option<usize> {
        match c {
            Expr::Var(x) => {
                let id = self.lookup(env, x, span)?;
                match &self.cells[id] {
                    Some(Type::Chan(_)) | None => Some(id),
                    Some(t) => {
                        let t = t.clone();
                        self.mismatch(format!("`{x}` has type {t}, expected a channel"), span);
                        None
                    }
                }
            }
            other => {
                self.mismatch(format!("`{other}` is not a channel"), span);
                None
            }
        }
    }

    /// Unify a channel cell with the payload observed at a use site.
    fn fix_payload(&mut self, id: usize, name: &Expr, payload: Vec<Type>, span: Span) {
        match &self.cells[id] {
            None => self.cells[id] = Some(Type::Chan(payload)),
            Some(Type::Chan(ts)) if *ts == payload => {}
            Some(t) => {
                let t = t.clone();
                self.mismatch(
                    format!("`{name}` has type {t} but is used with payload {}", Type::Chan(payload)),
                    span,
                );
            }
        }
    }

    fn process(&mut self, p: &Process, env: &mut Env, used: &mut BTreeSet<usize>) -> Process {
        match p {
            Process::Nil => Process::Nil,
            Process::Output { chan, args, cont, span } => {
                let span = *span;
                let cell = self.chan_cell(chan, env, span);
                let mut payload = Vec::new();
                let mut ok = true;
                let mut sent_qubits: Vec<(usize, &str)> = Vec::new();
                for a in args {
                    match a {
                        Expr::Measure(qs) => {
                            self.measure_operands(qs, env, span, used);
                            payload.extend(std::iter::repeat_n(Type::Bit, qs.len()));
                        }
                        _ => {
                            if a.contains_measure() {
                                self.mismatch("measure may only appear directly in an output".into(), span);
                            }
                            match self.expr(a, env, span, used) {
                                Some(t) => {
                                    if t == Type::Qbit {
                                        if let Expr::Var(x) = a {
                                            if let Some(&(_, id)) = env.iter().rev().find(|(n, _)| n == x) {
                                                if sent_qubits.iter().any(|(s, _)| *s == id) {
                                                    self.errors.push(LangError::DuplicateQubit {
                                                        name: x.clone(),
                                                        span,
                                                    });
                                                }
                                                sent_qubits.push((id, x));
                                            }
                                        }
                                    }
                                    payload.push(t);
                                }
                                None => ok = false,
                            }
                        }
                    }
                }
                if payload.is_empty() {
                    self.mismatch("an output must carry at least one value".into(), span);
                    ok = false;
                }
                if let (Some(id), true) = (cell, ok) {
                    self.fix_payload(id, chan, payload, span);
                }
                for (id, _) in &sent_qubits {
                    self.sent.insert(*id);
                }
                let cont = self.process(cont, env, used);
                Process::Output { chan: chan.clone(), args: args.clone(), cont: Box::new(cont), span }
            }
            Process::Input { chan, binders, cont, span } => {
                let span = *span;
                if let Some(id) = self.chan_cell(chan, env, span) {
                    let payload = binders.iter().map(|b| b.ty.clone()).collect();
                    self.fix_payload(id, chan, payload, span);
                }
                let mark = env.len();
                for b in binders {
                    check_type(&b.ty, span, &mut self.errors);
                    if !b.is_wildcard() {
                        let id = self.cell(Some(b.ty.clone()));
                        env.push((b.name.clone(), id));
                    }
                }
                let cont = self.process(cont, env, used);
                env.truncate(mark);
                Process::Input { chan: chan.clone(), binders: binders.clone(), cont: Box::new(cont), span }
            }
            Process::Action { targets, unitary, cont, span } => {
                let span = *span;
                let mut seen = HashSet::new();
                for t in targets {
                    match self.expr(t, env, span, used) {
                        Some(Type::Qbit) | None => {}
                        Some(ty) => self.mismatch(format!("cannot apply a unitary to `{t}` of type {ty}"), span),
                    }
                    if !seen.insert(t.to_string()) {
                        self.errors.push(LangError::DuplicateQubit { name: t.to_string(), span });
                    }
                }
                self.unitary(unitary, targets.len(), env, span, used);
                let cont = self.process(cont, env, used);
                Process::Action {
                    targets: targets.clone(),
                    unitary: unitary.clone(),
                    cont: Box::new(cont),
                    span,
                }
            }
            Process::Alloc { names, cont, span } => {
                let mark = env.len();
                let mut seen = HashSet::new();
                for n in names {
                    if !seen.insert(n.as_str()) {
                        self.errors.push(LangError::DuplicateQubit { name: n.clone(), span: *span });
                    }
                    let id = self.cell(Some(Type::Qbit));
                    env.push((n.clone(), id));
                }
                let cont = self.process(cont, env, used);
                env.truncate(mark);
                Process::Alloc { names: names.clone(), cont: Box::new(cont), span: *span }
            }
            Process::New { names, cont, span } => {
                let mark = env.len();
                let mut ids = Vec::new();
                for (n, ty) in names {
                    if let Some(t) = ty {
                        check_type(t, *span, &mut self.errors);
                        if !t.is_chan() {
                            self.mismatch(format!("restricted name `{n}` must have a channel type, found {t}"), *span);
                        }
                    }
                    let id = self.cell(ty.clone());
                    ids.push(id);
                    env.push((n.clone(), id));
                }
                let cont = self.process(cont, env, used);
                env.truncate(mark);
                let names = names
                    .iter()
                    .zip(&ids)
                    .map(|((n, _), id)| (n.clone(), self.cells[*id].clone()))
                    .collect();
                Process::New { names, cont: Box::new(cont), span: *span }
            }
            Process::Parallel(a, b) => {
                let before = self.sent.clone();
                let mut used_a = BTreeSet::new();
                let a2 = self.process(a, env, &mut used_a);
                let after_a = std::mem::replace(&mut self.sent, before);
                let mut used_b = BTreeSet::new();
                let b2 = self.process(b, env, &mut used_b);
                self.sent.extend(after_a);
                for id in used_a.intersection(&used_b) {
                    let name = env
                        .iter()
                        .rev()
                        .find(|(_, i)| i == id)
                        .map(|(n, _)| n.clone())
                        .unwrap_or_default();
                    self.errors.push(LangError::SharedQubit { name, span: b.span() });
                }
                used.extend(used_a);
                used.extend(used_b);
                Process::par(a2, b2)
            }
            Process::Invoke { name, args, span } => {
                let span = *span;
                let Some(def) = self.program.get(name) else {
                    self.errors.push(LangError::UnknownProcess { name: name.clone(), span });
                    return p.clone();
                };
                if def.params.len() != args.len() {
                    self.errors.push(LangError::Arity {
                        name: name.clone(),
                        expected: def.params.len(),
                        found: args.len(),
                        span,
                    });
                    return p.clone();
                }
                let mut qubit_args = HashSet::new();
                for (a, param) in args.iter().zip(&def.params) {
                    if let (Expr::Var(x), true) = (a, param.ty.is_chan()) {
                        if let Some(id) = self.lookup(env, x, span) {
                            if self.cells[id].is_none() {
                                self.cells[id] = Some(param.ty.clone());
                                continue;
                            }
                        } else {
                            continue;
                        }
                    }
                    if a.contains_measure() {
                        self.mismatch("measure may only appear directly in an output".into(), span);
                    }
                    if let Some(t) = self.expr(a, env, span, used) {
                        if t != param.ty {
                            self.mismatch(
                                format!("argument `{a}` of `{name}` has type {t}, expected {}", param.ty),
                                span,
                            );
                        }
                        if t == Type::Qbit && !qubit_args.insert(a.to_string()) {
                            self.errors.push(LangError::DuplicateQubit { name: a.to_string(), span });
                        }
                    }
                }
                p.clone()
            }
        }
    }

    fn unitary(&mut self, u: &Unitary, n: usize, env: &Env, span: Span, used: &mut BTreeSet<usize>) {
        match u {
            Unitary::Gate(g) => {
                if g.arity() != n {
                    self.errors.push(LangError::Unitary {
                        msg: format!("gate {} acts on {} qubit(s), applied to {n}", g.name(), g.arity()),
                        span,
                    });
                }
            }
            Unitary::Power(base, exp) => {
                self.unitary(base, n, env, span, used);
                self.bit_operand(exp, env, span, used);
            }
            Unitary::Matrix(rows) => {
                let dim = rows.len();
                if !(dim == 2 || dim == 4) || rows.iter().any(|r| r.len() != dim) {
                    self.errors.push(LangError::Unitary {
                        msg: "explicit matrices must be 2x2 or 4x4".into(),
                        span,
                    });
                    return;
                }
                if dim != 1 << n {
                    self.errors.push(LangError::Unitary {
                        msg: format!("a {dim}x{dim} matrix cannot act on {n} qubit(s)"),
                        span,
                    });
                }
                if !is_unitary(rows, UNITARY_TOL) {
                    self.errors.push(LangError::Unitary { msg: "matrix is not unitary".into(), span });
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse_program;

    fn check(src: &str) -> Result<Program, Diagnostics> {
        typecheck(&parse_program(src).unwrap())
    }

    #[test]
    fn identity_is_accepted() {
        check("process Identity(a:^[Qbit], d:^[Qbit]) = a?[x:Qbit].d![x].0").unwrap();
    }

    #[test]
    fn use_after_send() {
        let err = check("process P(a:^[Qbit], b:^[Qbit]) = a?[x:Qbit].b![x].{x *= H}.0").unwrap_err();
        assert!(matches!(err.0[0], LangError::QubitAfterSend { .. }));
    }

    #[test]
    fn duplicated_qubit_in_message() {
        let err = check("process P(b:^[Qbit,Qbit,Qbit]) = (qbit x, z).b![x, x, z].0").unwrap_err();
        assert!(err.iter().any(|e| matches!(e, LangError::DuplicateQubit { .. })));
    }

    #[test]
    fn shared_between_branches() {
        let err = check("process P(a:^[Qbit], b:^[Qbit]) = (qbit x).(a![x].0 || {x *= H}.0)").unwrap_err();
        assert!(err.iter().any(|e| matches!(e, LangError::SharedQubit { .. })));
    }

    #[test]
    fn infers_restricted_channel_type() {
        let p = check(
            "process A(b:^[Qbit, bit]) = (qbit x).b![x, 1].0\nprocess S() = (new b)(A(b) || b?[y:Qbit, j:bit].0)",
        )
        .unwrap();
        let Process::New { names, .. } = &p.get("S").unwrap().body else { panic!() };
        assert_eq!(names[0].1, Some(Type::Chan(vec![Type::Qbit, Type::Bit])));
    }

    #[test]
    fn payload_mismatch() {
        let err = check("process P(c:^[bit]) = (qbit x).c![x].0").unwrap_err();
        assert!(matches!(err.0[0], LangError::TypeMismatch { .. }));
    }

    #[test]
    fn gate_arity() {
        let err = check("process P() = (qbit x).{x *= CNot}.0").unwrap_err();
        assert!(matches!(err.0[0], LangError::Unitary { .. }));
    }

    #[test]
    fn non_unitary_matrix() {
        let err = check("process P() = (qbit x).{x *= [[1, 1], [0, 1]]}.0").unwrap_err();
        assert!(matches!(err.0[0], LangError::Unitary { .. }));
    }

    #[test]
    fn recursion_rejected() {
        let err = check("process A() = B()\nprocess B() = A()").unwrap_err();
        let LangError::Recursion { cycle } = &err.0[0] else { panic!() };
        assert_eq!(cycle, &vec!["A".to_string(), "B".into(), "A".into()]);
    }

    #[test]
    fn invocation_arity() {
        let err = check("process A(c:^[bit]) = 0\nprocess B() = A()").unwrap_err();
        assert!(matches!(err.0[0], LangError::Arity { expected: 1, found: 0, .. }));
    }

    #[test]
    fn measured_bits_need_bit_channel() {
        check("process P(c:^[bit, bit]) = (qbit x, y).c![measure(x, y)].0").unwrap();
        let err = check("process P(c:^[bit]) = (qbit x).c![measure x & 1].0").unwrap_err();
        assert!(matches!(err.0[0], LangError::TypeMismatch { .. }));
    }
}
