//! Surface language: lexer, parser, printer, substitution and type checker.

mod ast;
mod error;
mod lexer;
mod parser;
mod print;
mod scope;
mod subst;
mod typeck;

pub use ast::*;
pub use error::{Diagnostics, LangError};
pub use parser::{parse_process, parse_program};
pub(crate) use print::fmt_complex;
pub use subst::{free_names, replace, replace_expr, substitute, FreeNames, Substitution};
pub use typeck::{load_program, typecheck};
pub(crate) use typeck::is_unitary;
