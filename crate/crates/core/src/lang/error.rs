use std::fmt;

use super::ast::Span;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum LangError {
    #[error("{span}: syntax error: {msg}")]
    Syntax { span: Span, msg: String },
    #[error("{span}: duplicate definition of process `{name}`")]
    DuplicateDefinition { name: String, span: Span },
    #[error("{span}: unbound name `{name}`")]
    Unbound { name: String, span: Span },
    #[error("{span}: unknown process `{name}`")]
    UnknownProcess { name: String, span: Span },
    #[error("{span}: process `{name}` expects {expected} argument(s), found {found}")]
    Arity { name: String, expected: usize, found: usize, span: Span },
    #[error("{span}: type mismatch: {msg}")]
    TypeMismatch { msg: String, span: Span },
    #[error("{span}: qubit `{name}` is used after being sent")]
    QubitAfterSend { name: String, span: Span },
    #[error("{span}: qubit `{name}` appears more than once in one message")]
    DuplicateQubit { name: String, span: Span },
    #[error("{span}: qubit `{name}` is shared between parallel components")]
    SharedQubit { name: String, span: Span },
    #[error("recursive process definitions are not supported: {}", cycle.join(" -> "))]
    Recursion { cycle: Vec<String> },
    #[error("{span}: {msg}")]
    Unitary { msg: String, span: Span },
    #[error("cannot substitute {value} for `{name}`: {msg}")]
    Substitution { name: String, value: String, msg: String },
}

impl LangError {
    pub fn is_linearity(&self) -> bool {
        matches!(
            self,
            LangError::QubitAfterSend { .. }
                | LangError::DuplicateQubit { .. }
                | LangError::SharedQubit { .. }
        )
    }
}

/// One or more diagnostics from parsing or type checking.
#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostics(pub Vec<LangError>);

impl Diagnostics {
    pub fn single(e: LangError) -> Self {
        Diagnostics(vec![e])
    }

    pub fn iter(&self) -> impl Iterator<Item = &LangError> {
        self.0.iter()
    }
}

impl fmt::Display for Diagnostics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for Diagnostics {}

impl From<LangError> for Diagnostics {
    fn from(e: LangError) -> Self {
        Diagnostics::single(e)
    }
}
