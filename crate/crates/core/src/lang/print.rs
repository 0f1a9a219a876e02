//! Concrete-syntax printing. Output re-parses to the same AST.

use std::fmt::{self, Display, Formatter, Write};

use num_complex::Complex64;

use super::ast::*;

impl Display for Type {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Type::Qbit => f.write_str("Qbit"),
            Type::Bit => f.write_str("bit"),
            Type::Chan(ts) => {
                f.write_str("^[")?;
                write_list(f, ts)?;
                f.write_str("]")
            }
        }
    }
}

fn write_list<T: Display>(f: &mut Formatter<'_>, items: &[T]) -> fmt::Result {
    for (i, t) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{t}")?;
    }
    Ok(())
}

impl Display for Expr {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Var(v) | Expr::Qubit(v) | Expr::Chan(v) => f.write_str(v),
            Expr::Bit(b) => write!(f, "{}", u8::from(*b)),
            Expr::Measure(qs) if qs.len() == 1 => write!(f, "measure {}", qs[0]),
            Expr::Measure(qs) => {
                f.write_str("measure(")?;
                write_list(f, qs)?;
                f.write_str(")")
            }
            Expr::And(a, b) => {
                write!(f, "{a} & ")?;
                if matches!(**b, Expr::And(..)) {
                    write!(f, "({b})")
                } else {
                    write!(f, "{b}")
                }
            }
            Expr::Not(a) => {
                if matches!(**a, Expr::And(..)) {
                    write!(f, "!({a})")
                } else {
                    write!(f, "!{a}")
                }
            }
        }
    }
}

pub(crate) fn fmt_complex(c: Complex64) -> String {
    if c.im == 0.0 {
        format!("{}", c.re)
    } else if c.re == 0.0 {
        format!("{}i", c.im)
    } else if c.im < 0.0 {
        format!("{}-{}i", c.re, -c.im)
    } else {
        format!("{}+{}i", c.re, c.im)
    }
}

impl Display for Unitary {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Unitary::Gate(g) => f.write_str(g.name()),
            Unitary::Power(base, exp) => {
                if matches!(**base, Unitary::Power(..)) {
                    write!(f, "({base})^")?;
                } else {
                    write!(f, "{base}^")?;
                }
                if matches!(exp, Expr::And(..)) {
                    write!(f, "({exp})")
                } else {
                    write!(f, "{exp}")
                }
            }
            Unitary::Matrix(rows) => {
                f.write_str("[")?;
                for (i, row) in rows.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    f.write_str("[")?;
                    for (j, c) in row.iter().enumerate() {
                        if j > 0 {
                            f.write_str(", ")?;
                        }
                        f.write_str(&fmt_complex(*c))?;
                    }
                    f.write_str("]")?;
                }
                f.write_str("]")
            }
        }
    }
}

fn write_cont(f: &mut Formatter<'_>, cont: &Process) -> fmt::Result {
    if matches!(cont, Process::Parallel(..)) {
        write!(f, "({cont})")
    } else {
        write!(f, ".{cont}")
    }
}

impl Display for Process {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Process::Nil => f.write_str("0"),
            Process::Output { chan, args, cont, .. } => {
                write!(f, "{chan}![")?;
                write_list(f, args)?;
                f.write_str("]")?;
                write_cont(f, cont)
            }
            Process::Input { chan, binders, cont, .. } => {
                write!(f, "{chan}?[")?;
                for (i, b) in binders.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{}:{}", b.name, b.ty)?;
                }
                f.write_str("]")?;
                write_cont(f, cont)
            }
            Process::Action { targets, unitary, cont, .. } => {
                f.write_str("{")?;
                write_list(f, targets)?;
                write!(f, " *= {unitary}}}")?;
                write_cont(f, cont)
            }
            Process::Alloc { names, cont, .. } => {
                f.write_str("(qbit ")?;
                write_list(f, names)?;
                f.write_str(")")?;
                write_cont(f, cont)
            }
            Process::New { names, cont, .. } => {
                f.write_str("(new ")?;
                for (i, (n, ty)) in names.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    f.write_str(n)?;
                    if let Some(t) = ty {
                        write!(f, ":{t}")?;
                    }
                }
                f.write_str(")")?;
                write_cont(f, cont)
            }
            Process::Parallel(a, b) => {
                write!(f, "{a} || ")?;
                if matches!(**b, Process::Parallel(..)) {
                    write!(f, "({b})")
                } else {
                    write!(f, "{b}")
                }
            }
            Process::Invoke { name, args, .. } => {
                write!(f, "{name}(")?;
                write_list(f, args)?;
                f.write_str(")")
            }
        }
    }
}

impl Display for Definition {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write!(f, "process {}(", self.name)?;
        for (i, p) in self.params.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}:{}", p.name, p.ty)?;
        }
        write!(f, ") = {}", self.body)
    }
}

impl Display for Program {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        for d in &self.definitions {
            writeln!(out, "{d}")?;
        }
        f.write_str(&out)
    }
}
