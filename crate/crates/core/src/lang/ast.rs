//! Abstract syntax of CQP programs.
//!
//! Source programs only contain variables; the semantics replaces variables
//! with runtime values (`Expr::Qubit`, `Expr::Chan`, bit literals) through
//! substitution. Values and variables are distinct constructors, so
//! substituting a value can never be captured by a binder.

use std::collections::BTreeMap;
use std::fmt;
use std::hash::{Hash, Hasher};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// A source position. Spans never participate in structural equality, so
/// two ASTs that differ only in layout compare equal.
#[derive(Clone, Copy, Debug, Default)]
pub struct Span {
    pub line: usize,
    pub col: usize,
}

impl Span {
    pub fn new(line: usize, col: usize) -> Self {
        Span { line, col }
    }
}

impl PartialEq for Span {
    fn eq(&self, _other: &Self) -> bool {
        true
    }
}

impl Eq for Span {}

impl Hash for Span {
    fn hash<H: Hasher>(&self, _state: &mut H) {}
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Type {
    Qbit,
    Bit,
    /// `^[T, ...]`: a channel carrying messages of the listed payload types.
    Chan(Vec<Type>),
}

impl Type {
    pub fn is_chan(&self) -> bool {
        matches!(self, Type::Chan(_))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Var(String),
    Bit(bool),
    /// Runtime qubit name (never produced by the parser).
    Qubit(String),
    /// Runtime channel name (never produced by the parser).
    Chan(String),
    /// Standard-basis measurement of the listed qubits; yields one bit per qubit.
    Measure(Vec<Expr>),
    And(Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
}

impl Expr {
    pub fn var(name: impl Into<String>) -> Self {
        Expr::Var(name.into())
    }

    pub fn contains_measure(&self) -> bool {
        match self {
            Expr::Measure(_) => true,
            Expr::And(a, b) => a.contains_measure() || b.contains_measure(),
            Expr::Not(a) => a.contains_measure(),
            _ => false,
        }
    }

    /// Evaluate a closed bit expression. `lookup` resolves variables that are
    /// still symbolic (measurement placeholders).
    pub fn eval_bit(&self, lookup: &dyn Fn(&str) -> Option<bool>) -> Option<bool> {
        match self {
            Expr::Bit(b) => Some(*b),
            Expr::Var(v) => lookup(v),
            Expr::And(a, b) => Some(a.eval_bit(lookup)? & b.eval_bit(lookup)?),
            Expr::Not(a) => Some(!a.eval_bit(lookup)?),
            _ => None,
        }
    }

    pub(crate) fn visit_vars(&self, f: &mut dyn FnMut(&str)) {
        match self {
            Expr::Var(v) => f(v),
            Expr::Measure(qs) => qs.iter().for_each(|q| q.visit_vars(f)),
            Expr::And(a, b) => {
                a.visit_vars(f);
                b.visit_vars(f);
            }
            Expr::Not(a) => a.visit_vars(f),
            Expr::Bit(_) | Expr::Qubit(_) | Expr::Chan(_) => {}
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Gate {
    H,
    X,
    Y,
    Z,
    CNot,
}

impl Gate {
    pub fn arity(self) -> usize {
        match self {
            Gate::CNot => 2,
            _ => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Gate::H => "H",
            Gate::X => "X",
            Gate::Y => "Y",
            Gate::Z => "Z",
            Gate::CNot => "CNot",
        }
    }

    pub fn from_name(name: &str) -> Option<Gate> {
        Some(match name {
            "H" => Gate::H,
            "X" => Gate::X,
            "Y" => Gate::Y,
            "Z" => Gate::Z,
            "CNot" | "CNOT" => Gate::CNot,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Unitary {
    Gate(Gate),
    /// `U^b`: applies `U` when the bit expression evaluates to 1, identity otherwise.
    Power(Box<Unitary>, Expr),
    /// Row-major 2x2 or 4x4 complex matrix.
    Matrix(Vec<Vec<Complex64>>),
}

impl Unitary {
    pub fn arity(&self) -> Option<usize> {
        match self {
            Unitary::Gate(g) => Some(g.arity()),
            Unitary::Power(u, _) => u.arity(),
            Unitary::Matrix(rows) => match rows.len() {
                2 => Some(1),
                4 => Some(2),
                _ => None,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Binder {
    pub name: String,
    pub ty: Type,
}

impl Binder {
    pub fn is_wildcard(&self) -> bool {
        self.name == "_"
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Process {
    Nil,
    Output {
        chan: Expr,
        args: Vec<Expr>,
        cont: Box<Process>,
        span: Span,
    },
    Input {
        chan: Expr,
        binders: Vec<Binder>,
        cont: Box<Process>,
        span: Span,
    },
    Action {
        targets: Vec<Expr>,
        unitary: Unitary,
        cont: Box<Process>,
        span: Span,
    },
    Alloc {
        names: Vec<String>,
        cont: Box<Process>,
        span: Span,
    },
    /// Channel restriction. The type is optional in source and filled in by
    /// the type checker.
    New {
        names: Vec<(String, Option<Type>)>,
        cont: Box<Process>,
        span: Span,
    },
    Parallel(Box<Process>, Box<Process>),
    Invoke {
        name: String,
        args: Vec<Expr>,
        span: Span,
    },
}

impl Process {
    pub fn span(&self) -> Span {
        match self {
            Process::Output { span, .. }
            | Process::Input { span, .. }
            | Process::Action { span, .. }
            | Process::Alloc { span, .. }
            | Process::New { span, .. }
            | Process::Invoke { span, .. } => *span,
            Process::Parallel(a, _) => a.span(),
            Process::Nil => Span::default(),
        }
    }

    pub fn par(a: Process, b: Process) -> Process {
        Process::Parallel(Box::new(a), Box::new(b))
    }

    /// Flatten nested parallel compositions into their components.
    pub fn components(&self) -> Vec<&Process> {
        let mut out = Vec::new();
        fn go<'a>(p: &'a Process, out: &mut Vec<&'a Process>) {
            match p {
                Process::Parallel(a, b) => {
                    go(a, out);
                    go(b, out);
                }
                other => out.push(other),
            }
        }
        go(self, &mut out);
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Param {
    pub name: String,
    pub ty: Type,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Definition {
    pub name: String,
    pub params: Vec<Param>,
    pub body: Process,
    pub span: Span,
}

/// A set of process definitions, kept in source order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Program {
    pub definitions: Vec<Definition>,
}

impl Program {
    pub fn get(&self, name: &str) -> Option<&Definition> {
        self.definitions.iter().find(|d| d.name == name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.definitions.iter().map(|d| d.name.as_str())
    }

    pub fn by_name(&self) -> BTreeMap<&str, &Definition> {
        self.definitions.iter().map(|d| (d.name.as_str(), d)).collect()
    }
}

/// A runtime value bound to a variable.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Value {
    Bit(bool),
    Qubit(String),
    Chan(String),
}

impl Value {
    pub fn to_expr(&self) -> Expr {
        match self {
            Value::Bit(b) => Expr::Bit(*b),
            Value::Qubit(q) => Expr::Qubit(q.clone()),
            Value::Chan(c) => Expr::Chan(c.clone()),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bit(b) => write!(f, "{}", u8::from(*b)),
            Value::Qubit(q) => write!(f, "{q}"),
            Value::Chan(c) => write!(f, "{c}"),
        }
    }
}
