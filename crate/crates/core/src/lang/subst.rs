use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::ast::*;
use super::error::LangError;

/// Simultaneous substitution of values for free variables.
pub type Substitution = BTreeMap<String, Value>;

/// Replace free occurrences of the variables in `kappa` by their values.
///
/// Values are checked against the position where the variable occurs: a
/// channel position needs a channel, measurement and action targets need a
/// qubit, and boolean operators need a bit.
pub fn substitute(t: &Process, kappa: &Substitution) -> Result<Process, LangError> {
    let mut err = None;
    check_positions(t, kappa, &mut Vec::new(), &mut err);
    if let Some(e) = err {
        return Err(e);
    }
    let map: HashMap<String, Expr> = kappa.iter().map(|(k, v)| (k.clone(), v.to_expr())).collect();
    Ok(replace(t, &map))
}

#[derive(Clone, Copy, PartialEq)]
enum Slot {
    Channel,
    Qubit,
    Bit,
    Any,
}

fn fits(slot: Slot, v: &Value) -> bool {
    matches!(
        (slot, v),
        (Slot::Any, _)
            | (Slot::Channel, Value::Chan(_))
            | (Slot::Qubit, Value::Qubit(_))
            | (Slot::Bit, Value::Bit(_))
    )
}

fn check_expr(
    e: &Expr,
    slot: Slot,
    kappa: &Substitution,
    bound: &[String],
    err: &mut Option<LangError>,
) {
    match e {
        Expr::Var(x) => {
            if bound.contains(x) || err.is_some() {
                return;
            }
            if let Some(v) = kappa.get(x) {
                if !fits(slot, v) {
                    let want = match slot {
                        Slot::Channel => "a channel",
                        Slot::Qubit => "a qubit",
                        Slot::Bit => "a bit",
                        Slot::Any => "a value",
                    };
                    *err = Some(LangError::Substitution {
                        name: x.clone(),
                        value: v.to_string(),
                        msg: format!("`{x}` is used where {want} is expected"),
                    });
                }
            }
        }
        Expr::Measure(qs) => qs.iter().for_each(|q| check_expr(q, Slot::Qubit, kappa, bound, err)),
        Expr::And(a, b) => {
            check_expr(a, Slot::Bit, kappa, bound, err);
            check_expr(b, Slot::Bit, kappa, bound, err);
        }
        Expr::Not(a) => check_expr(a, Slot::Bit, kappa, bound, err),
        Expr::Bit(_) | Expr::Qubit(_) | Expr::Chan(_) => {}
    }
}

fn check_positions(
    t: &Process,
    kappa: &Substitution,
    bound: &mut Vec<String>,
    err: &mut Option<LangError>,
) {
    match t {
        Process::Nil => {}
        Process::Output { chan, args, cont, .. } => {
            check_expr(chan, Slot::Channel, kappa, bound, err);
            args.iter().for_each(|a| check_expr(a, Slot::Any, kappa, bound, err));
            check_positions(cont, kappa, bound, err);
        }
        Process::Input { chan, binders, cont, .. } => {
            check_expr(chan, Slot::Channel, kappa, bound, err);
            let mark = bound.len();
            bound.extend(binders.iter().map(|b| b.name.clone()));
            check_positions(cont, kappa, bound, err);
            bound.truncate(mark);
        }
        Process::Action { targets, unitary, cont, .. } => {
            targets.iter().for_each(|q| check_expr(q, Slot::Qubit, kappa, bound, err));
            let mut u = unitary;
            while let Unitary::Power(base, exp) = u {
                check_expr(exp, Slot::Bit, kappa, bound, err);
                u = base;
            }
            check_positions(cont, kappa, bound, err);
        }
        Process::Alloc { names, cont, .. } => {
            let mark = bound.len();
            bound.extend(names.iter().cloned());
            check_positions(cont, kappa, bound, err);
            bound.truncate(mark);
        }
        Process::New { names, cont, .. } => {
            let mark = bound.len();
            bound.extend(names.iter().map(|(n, _)| n.clone()));
            check_positions(cont, kappa, bound, err);
            bound.truncate(mark);
        }
        Process::Parallel(a, b) => {
            check_positions(a, kappa, bound, err);
            check_positions(b, kappa, bound, err);
        }
        Process::Invoke { args, .. } => {
            args.iter().for_each(|a| check_expr(a, Slot::Any, kappa, bound, err));
        }
    }
}

/// Unchecked simultaneous replacement of free variables by expressions.
/// Binders shadow the map. The replacement expressions must not contain
/// variables that a binder of `t` could capture; runtime values and the
/// semantics' placeholder names satisfy this.
pub fn replace(t: &Process, map: &HashMap<String, Expr>) -> Process {
    if map.is_empty() {
        return t.clone();
    }
    match t {
        Process::Nil => Process::Nil,
        Process::Output { chan, args, cont, span } => Process::Output {
            chan: replace_expr(chan, map),
            args: args.iter().map(|a| replace_expr(a, map)).collect(),
            cont: Box::new(replace(cont, map)),
            span: *span,
        },
        Process::Input { chan, binders, cont, span } => {
            let inner = shadow(map, binders.iter().map(|b| b.name.as_str()));
            Process::Input {
                chan: replace_expr(chan, map),
                binders: binders.clone(),
                cont: Box::new(replace(cont, &inner)),
                span: *span,
            }
        }
        Process::Action { targets, unitary, cont, span } => Process::Action {
            targets: targets.iter().map(|q| replace_expr(q, map)).collect(),
            unitary: replace_unitary(unitary, map),
            cont: Box::new(replace(cont, map)),
            span: *span,
        },
        Process::Alloc { names, cont, span } => {
            let inner = shadow(map, names.iter().map(String::as_str));
            Process::Alloc { names: names.clone(), cont: Box::new(replace(cont, &inner)), span: *span }
        }
        Process::New { names, cont, span } => {
            let inner = shadow(map, names.iter().map(|(n, _)| n.as_str()));
            Process::New { names: names.clone(), cont: Box::new(replace(cont, &inner)), span: *span }
        }
        Process::Parallel(a, b) => Process::par(replace(a, map), replace(b, map)),
        Process::Invoke { name, args, span } => Process::Invoke {
            name: name.clone(),
            args: args.iter().map(|a| replace_expr(a, map)).collect(),
            span: *span,
        },
    }
}

fn shadow<'a>(
    map: &HashMap<String, Expr>,
    names: impl Iterator<Item = &'a str>,
) -> HashMap<String, Expr> {
    let mut inner = map.clone();
    for n in names {
        inner.remove(n);
    }
    inner
}

pub fn replace_expr(e: &Expr, map: &HashMap<String, Expr>) -> Expr {
    match e {
        Expr::Var(x) => map.get(x).cloned().unwrap_or_else(|| e.clone()),
        Expr::Measure(qs) => Expr::Measure(qs.iter().map(|q| replace_expr(q, map)).collect()),
        Expr::And(a, b) => Expr::And(Box::new(replace_expr(a, map)), Box::new(replace_expr(b, map))),
        Expr::Not(a) => Expr::Not(Box::new(replace_expr(a, map))),
        Expr::Bit(_) | Expr::Qubit(_) | Expr::Chan(_) => e.clone(),
    }
}

fn replace_unitary(u: &Unitary, map: &HashMap<String, Expr>) -> Unitary {
    match u {
        Unitary::Power(base, exp) => {
            Unitary::Power(Box::new(replace_unitary(base, map)), replace_expr(exp, map))
        }
        other => other.clone(),
    }
}

/// Free names of a term, split by kind.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FreeNames {
    pub variables: BTreeSet<String>,
    pub channels: BTreeSet<String>,
    pub qubits: BTreeSet<String>,
}

/// Collect free names. A free variable counts as a channel when it occurs
/// in channel position, or, if `program` is given, when it is passed to a
/// channel-typed parameter of an invoked process.
pub fn free_names(t: &Process, program: Option<&Program>) -> FreeNames {
    let mut out = FreeNames::default();
    let mut var_like = BTreeSet::new();
    collect(t, program, &mut Vec::new(), &mut out, &mut var_like);
    out.variables = var_like.difference(&out.channels).cloned().collect();
    out
}

fn collect_expr(e: &Expr, bound: &[String], out: &mut FreeNames, vars: &mut BTreeSet<String>) {
    match e {
        Expr::Var(x) if !bound.contains(x) => {
            vars.insert(x.clone());
        }
        Expr::Var(_) | Expr::Bit(_) => {}
        Expr::Qubit(q) => {
            out.qubits.insert(q.clone());
        }
        Expr::Chan(c) => {
            out.channels.insert(c.clone());
        }
        Expr::Measure(qs) => qs.iter().for_each(|q| collect_expr(q, bound, out, vars)),
        Expr::And(a, b) => {
            collect_expr(a, bound, out, vars);
            collect_expr(b, bound, out, vars);
        }
        Expr::Not(a) => collect_expr(a, bound, out, vars),
    }
}

fn collect_chan(e: &Expr, bound: &[String], out: &mut FreeNames) {
    match e {
        Expr::Var(x) if !bound.contains(x) => {
            out.channels.insert(x.clone());
        }
        Expr::Chan(c) => {
            out.channels.insert(c.clone());
        }
        _ => {}
    }
}

fn collect(
    t: &Process,
    program: Option<&Program>,
    bound: &mut Vec<String>,
    out: &mut FreeNames,
    vars: &mut BTreeSet<String>,
) {
    match t {
        Process::Nil => {}
        Process::Output { chan, args, cont, .. } => {
            collect_chan(chan, bound, out);
            args.iter().for_each(|a| collect_expr(a, bound, out, vars));
            collect(cont, program, bound, out, vars);
        }
        Process::Input { chan, binders, cont, .. } => {
            collect_chan(chan, bound, out);
            let mark = bound.len();
            bound.extend(binders.iter().map(|b| b.name.clone()));
            collect(cont, program, bound, out, vars);
            bound.truncate(mark);
        }
        Process::Action { targets, unitary, cont, .. } => {
            targets.iter().for_each(|q| collect_expr(q, bound, out, vars));
            let mut u = unitary;
            while let Unitary::Power(base, exp) = u {
                collect_expr(exp, bound, out, vars);
                u = base;
            }
            collect(cont, program, bound, out, vars);
        }
        Process::Alloc { names, cont, .. } => {
            let mark = bound.len();
            bound.extend(names.iter().cloned());
            collect(cont, program, bound, out, vars);
            bound.truncate(mark);
        }
        Process::New { names, cont, .. } => {
            let mark = bound.len();
            bound.extend(names.iter().map(|(n, _)| n.clone()));
            collect(cont, program, bound, out, vars);
            bound.truncate(mark);
        }
        Process::Parallel(a, b) => {
            collect(a, program, bound, out, vars);
            collect(b, program, bound, out, vars);
        }
        Process::Invoke { name, args, .. } => {
            let params = program.and_then(|p| p.get(name)).map(|d| &d.params);
            for (i, a) in args.iter().enumerate() {
                let is_chan = params.and_then(|ps| ps.get(i)).is_some_and(|p| p.ty.is_chan());
                if is_chan {
                    collect_chan(a, bound, out);
                } else {
                    collect_expr(a, bound, out, vars);
                }
            }
        }
    }
}
