use std::collections::HashSet;

use super::ast::*;
use super::error::LangError;

/// Report every unbound variable and every invocation of an unknown process.
pub(crate) fn check_scopes(program: &Program) -> Vec<LangError> {
    let known: HashSet<&str> = program.names().collect();
    let mut errors = Vec::new();
    for def in &program.definitions {
        let mut scope: Vec<String> = def.params.iter().map(|p| p.name.clone()).collect();
        walk(&def.body, &mut scope, &known, &mut errors);
    }
    errors
}

fn check_expr(e: &Expr, scope: &[String], span: Span, errors: &mut Vec<LangError>) {
    e.visit_vars(&mut |v| {
        if !scope.iter().any(|s| s == v) {
            errors.push(LangError::Unbound { name: v.to_string(), span });
        }
    });
}

fn walk(p: &Process, scope: &mut Vec<String>, known: &HashSet<&str>, errors: &mut Vec<LangError>) {
    match p {
        Process::Nil => {}
        Process::Output { chan, args, cont, span } => {
            check_expr(chan, scope, *span, errors);
            for a in args {
                check_expr(a, scope, *span, errors);
            }
            walk(cont, scope, known, errors);
        }
        Process::Input { chan, binders, cont, span } => {
            check_expr(chan, scope, *span, errors);
            let mark = scope.len();
            scope.extend(binders.iter().filter(|b| !b.is_wildcard()).map(|b| b.name.clone()));
            walk(cont, scope, known, errors);
            scope.truncate(mark);
        }
        Process::Action { targets, unitary, cont, span } => {
            for t in targets {
                check_expr(t, scope, *span, errors);
            }
            check_unitary(unitary, scope, *span, errors);
            walk(cont, scope, known, errors);
        }
        Process::Alloc { names, cont, .. } => {
            let mark = scope.len();
            scope.extend(names.iter().cloned());
            walk(cont, scope, known, errors);
            scope.truncate(mark);
        }
        Process::New { names, cont, .. } => {
            let mark = scope.len();
            scope.extend(names.iter().map(|(n, _)| n.clone()));
            walk(cont, scope, known, errors);
            scope.truncate(mark);
        }
        Process::Parallel(a, b) => {
            walk(a, scope, known, errors);
            walk(b, scope, known, errors);
        }
        Process::Invoke { name, args, span } => {
            if !known.contains(name.as_str()) {
                errors.push(LangError::UnknownProcess { name: name.clone(), span: *span });
            }
            for a in args {
                check_expr(a, scope, *span, errors);
            }
        }
    }
}

fn check_unitary(u: &Unitary, scope: &[String], span: Span, errors: &mut Vec<LangError>) {
    match u {
        Unitary::Gate(_) | Unitary::Matrix(_) => {}
        Unitary::Power(base, exp) => {
            check_unitary(base, scope, span, errors);
            check_expr(exp, scope, span, errors);
        }
    }
}
