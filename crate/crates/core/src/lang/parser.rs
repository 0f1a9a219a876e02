//! Recursive-descent parser for `.cqp` sources.
//!
//! ```text
//! program  := ("process" NAME "(" params? ")" "=" par)*
//! par      := seq ("||" seq)*
//! seq      := "0" | "(" par ")" | NAME "(" args? ")"
//!           | prefix "."? seq?
//! prefix   := c "![" exprs "]" | c "?[" x ":" T, ... "]"
//!           | "{" q, ... "*=" U "}" | "{" "measure" ... "}"
//!           | "(qbit" x, ... ")" | "(new" c (":" T)?, ... ")"
//! ```
//!
//! A missing continuation after a prefix stands for `0`.

use std::collections::{BTreeSet, HashSet};

use num_complex::Complex64;

use super::ast::*;
use super::error::{Diagnostics, LangError};
use super::lexer::{lex, Tok, Token};

pub fn parse_program(src: &str) -> Result<Program, Diagnostics> {
    let tokens = lex(src)?;
    let used = tokens
        .iter()
        .filter_map(|t| match &t.tok {
            Tok::Ident(s) => Some(s.clone()),
            _ => None,
        })
        .collect();
    let mut parser = Parser { tokens, pos: 0, used, fresh: 0 };
    let program = parser.program()?;

    let mut errors = Vec::new();
    let mut seen = HashSet::new();
    for def in &program.definitions {
        if !seen.insert(def.name.as_str()) {
            errors.push(LangError::DuplicateDefinition { name: def.name.clone(), span: def.span });
        }
    }
    errors.extend(super::scope::check_scopes(&program));
    if errors.is_empty() {
        Ok(program)
    } else {
        Err(Diagnostics(errors))
    }
}

/// Parse a single process term; names are not scope-checked.
pub fn parse_process(src: &str) -> Result<Process, Diagnostics> {
    let tokens = lex(src)?;
    let used = tokens
        .iter()
        .filter_map(|t| match &t.tok {
            Tok::Ident(s) => Some(s.clone()),
            _ => None,
        })
        .collect();
    let mut parser = Parser { tokens, pos: 0, used, fresh: 0 };
    let p = parser.par()?;
    parser.expect(Tok::Eof)?;
    Ok(p)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    used: BTreeSet<String>,
    fresh: usize,
}

type PResult<T> = Result<T, LangError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn span(&self) -> Span {
        self.tokens[self.pos].span
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn error<T>(&self, msg: impl Into<String>) -> PResult<T> {
        Err(LangError::Syntax { span: self.span(), msg: msg.into() })
    }

    fn expect(&mut self, tok: Tok) -> PResult<Token> {
        if *self.peek() == tok {
            Ok(self.bump())
        } else {
            self.error(format!("expected {}, found {}", tok.describe(), self.peek().describe()))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            other => self.error(format!("expected a name, found {}", other.describe())),
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn fresh_channel(&mut self) -> String {
        loop {
            let name = format!("_m{}", self.fresh);
            self.fresh += 1;
            if !self.used.contains(&name) {
                self.used.insert(name.clone());
                return name;
            }
        }
    }

    fn program(&mut self) -> PResult<Program> {
        let mut definitions = Vec::new();
        while *self.peek() != Tok::Eof {
            definitions.push(self.definition()?);
        }
        Ok(Program { definitions })
    }

    fn definition(&mut self) -> PResult<Definition> {
        let span = self.span();
        if !self.is_kw("process") {
            return self.error(format!("expected `process`, found {}", self.peek().describe()));
        }
        self.bump();
        let name = self.ident()?;
        self.expect(Tok::LParen)?;
        let mut params = Vec::new();
        if *self.peek() != Tok::RParen {
            loop {
                let pname = self.ident()?;
                self.expect(Tok::Colon)?;
                let ty = self.ty()?;
                params.push(Param { name: pname, ty });
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        self.expect(Tok::RParen)?;
        self.expect(Tok::Eq)?;
        let body = self.par()?;
        Ok(Definition { name, params, body, span })
    }

    fn ty(&mut self) -> PResult<Type> {
        match self.peek().clone() {
            Tok::Ident(s) if s == "Qbit" || s == "qbit" => {
                self.bump();
                Ok(Type::Qbit)
            }
            Tok::Ident(s) if s == "bit" || s == "Bit" => {
                self.bump();
                Ok(Type::Bit)
            }
            Tok::Caret => {
                self.bump();
                self.expect(Tok::LBracket)?;
                let mut payload = vec![self.ty()?];
                while self.eat(&Tok::Comma) {
                    payload.push(self.ty()?);
                }
                self.expect(Tok::RBracket)?;
                Ok(Type::Chan(payload))
            }
            other => self.error(format!("expected a type, found {}", other.describe())),
        }
    }

    fn par(&mut self) -> PResult<Process> {
        let mut p = self.seq()?;
        while self.eat(&Tok::Par) {
            let q = self.seq()?;
            p = Process::par(p, q);
        }
        Ok(p)
    }

    fn starts_seq(&self) -> bool {
        match self.peek() {
            Tok::Number(n) => n == "0",
            Tok::LParen | Tok::LBrace => true,
            Tok::Ident(s) => s != "process",
            _ => false,
        }
    }

    /// Continuation after a prefix: optional dot, then a sequential term or `0`.
    fn continuation(&mut self) -> PResult<Process> {
        let dotted = self.eat(&Tok::Dot);
        if dotted || self.starts_seq() {
            self.seq()
        } else {
            Ok(Process::Nil)
        }
    }

    fn seq(&mut self) -> PResult<Process> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Number(n) if n == "0" => {
                self.bump();
                Ok(Process::Nil)
            }
            Tok::LParen => {
                if matches!(self.peek_at(1), Tok::Ident(s) if s == "qbit") {
                    self.bump();
                    self.bump();
                    let names = self.ident_list()?;
                    self.expect(Tok::RParen)?;
                    let cont = Box::new(self.continuation()?);
                    Ok(Process::Alloc { names, cont, span })
                } else if matches!(self.peek_at(1), Tok::Ident(s) if s == "new") {
                    self.bump();
                    self.bump();
                    let mut names = Vec::new();
                    loop {
                        let n = self.ident()?;
                        let ty = if self.eat(&Tok::Colon) { Some(self.ty()?) } else { None };
                        names.push((n, ty));
                        if !self.eat(&Tok::Comma) {
                            break;
                        }
                    }
                    self.expect(Tok::RParen)?;
                    let cont = Box::new(self.continuation()?);
                    Ok(Process::New { names, cont, span })
                } else {
                    self.bump();
                    let p = self.par()?;
                    self.expect(Tok::RParen)?;
                    Ok(p)
                }
            }
            Tok::LBrace => self.action(),
            Tok::Ident(name) => match self.peek_at(1) {
                Tok::Bang => {
                    self.bump();
                    self.bump();
                    self.expect(Tok::LBracket)?;
                    let args = self.expr_list(Tok::RBracket)?;
                    self.expect(Tok::RBracket)?;
                    let cont = Box::new(self.continuation()?);
                    Ok(Process::Output { chan: Expr::Var(name), args, cont, span })
                }
                Tok::Question => {
                    self.bump();
                    self.bump();
                    self.expect(Tok::LBracket)?;
                    let mut binders = Vec::new();
                    loop {
                        let x = self.ident()?;
                        self.expect(Tok::Colon)?;
                        let ty = self.ty()?;
                        binders.push(Binder { name: x, ty });
                        if !self.eat(&Tok::Comma) {
                            break;
                        }
                    }
                    self.expect(Tok::RBracket)?;
                    let cont = Box::new(self.continuation()?);
                    Ok(Process::Input { chan: Expr::Var(name), binders, cont, span })
                }
                Tok::LParen => {
                    self.bump();
                    self.bump();
                    let args = self.expr_list(Tok::RParen)?;
                    self.expect(Tok::RParen)?;
                    Ok(Process::Invoke { name, args, span })
                }
                other => self.error(format!(
                    "expected `!`, `?` or `(` after `{name}`, found {}",
                    other.describe()
                )),
            },
            other => self.error(format!("expected a process, found {}", other.describe())),
        }
    }

    fn ident_list(&mut self) -> PResult<Vec<String>> {
        let mut names = vec![self.ident()?];
        while self.eat(&Tok::Comma) {
            names.push(self.ident()?);
        }
        Ok(names)
    }

    fn action(&mut self) -> PResult<Process> {
        let span = self.span();
        self.expect(Tok::LBrace)?;
        if self.is_kw("measure") {
            let e = self.expr()?;
            self.expect(Tok::RBrace)?;
            let Expr::Measure(qs) = e else {
                return Err(LangError::Syntax {
                    span,
                    msg: "only a bare `measure` may be used as an action".into(),
                });
            };
            let cont = self.continuation()?;
            return Ok(self.desugar_measure(qs, cont, span));
        }
        let mut targets = Vec::new();
        loop {
            targets.push(Expr::Var(self.ident()?));
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        if *self.peek() != Tok::StarEq {
            return self.error(format!(
                "expected `*=` in action, found {} (only `measure` expressions may be used as actions)",
                self.peek().describe()
            ));
        }
        self.bump();
        let unitary = self.unitary()?;
        self.expect(Tok::RBrace)?;
        let cont = Box::new(self.continuation()?);
        Ok(Process::Action { targets, unitary, cont, span })
    }

    /// `{measure q}.P` becomes `(new m)(m![measure q].0 || m?[_:bit].P)`.
    fn desugar_measure(&mut self, qs: Vec<Expr>, cont: Process, span: Span) -> Process {
        let m = self.fresh_channel();
        let n = qs.len();
        let sender = Process::Output {
            chan: Expr::Var(m.clone()),
            args: vec![Expr::Measure(qs)],
            cont: Box::new(Process::Nil),
            span,
        };
        let receiver = Process::Input {
            chan: Expr::Var(m.clone()),
            binders: (0..n).map(|_| Binder { name: "_".into(), ty: Type::Bit }).collect(),
            cont: Box::new(cont),
            span,
        };
        Process::New {
            names: vec![(m, Some(Type::Chan(vec![Type::Bit; n])))],
            cont: Box::new(Process::par(sender, receiver)),
            span,
        }
    }

    fn unitary(&mut self) -> PResult<Unitary> {
        let span = self.span();
        let base = match self.peek().clone() {
            Tok::Ident(g) => match Gate::from_name(&g) {
                Some(gate) => {
                    self.bump();
                    Unitary::Gate(gate)
                }
                None => {
                    return Err(LangError::Unitary { msg: format!("unknown gate `{g}`"), span })
                }
            },
            Tok::LParen => {
                self.bump();
                let u = self.unitary()?;
                self.expect(Tok::RParen)?;
                u
            }
            Tok::LBracket => self.matrix()?,
            other => return self.error(format!("expected a unitary, found {}", other.describe())),
        };
        if self.eat(&Tok::Caret) {
            let exp = self.unary()?;
            Ok(Unitary::Power(Box::new(base), exp))
        } else {
            Ok(base)
        }
    }

    fn matrix(&mut self) -> PResult<Unitary> {
        self.expect(Tok::LBracket)?;
        let mut rows = Vec::new();
        loop {
            self.expect(Tok::LBracket)?;
            let mut row = vec![self.complex()?];
            while self.eat(&Tok::Comma) {
                row.push(self.complex()?);
            }
            self.expect(Tok::RBracket)?;
            rows.push(row);
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(Tok::RBracket)?;
        Ok(Unitary::Matrix(rows))
    }

    fn real(&mut self) -> PResult<f64> {
        let neg = self.eat(&Tok::Minus);
        match self.peek().clone() {
            Tok::Number(n) => {
                self.bump();
                let v: f64 = n.parse().map_err(|_| LangError::Syntax {
                    span: self.span(),
                    msg: format!("bad number `{n}`"),
                })?;
                Ok(if neg { -v } else { v })
            }
            other => self.error(format!("expected a number, found {}", other.describe())),
        }
    }

    fn imag_suffix(&mut self) -> bool {
        if self.is_kw("i") {
            self.bump();
            true
        } else {
            false
        }
    }

    fn complex(&mut self) -> PResult<Complex64> {
        let first = self.real()?;
        if self.imag_suffix() {
            return Ok(Complex64::new(0.0, first));
        }
        let sign = match self.peek() {
            Tok::Plus => 1.0,
            Tok::Minus => -1.0,
            _ => return Ok(Complex64::new(first, 0.0)),
        };
        self.bump();
        let im = self.real()?;
        if !self.imag_suffix() {
            return self.error("expected `i` after imaginary part");
        }
        Ok(Complex64::new(first, sign * im))
    }

    fn expr_list(&mut self, close: Tok) -> PResult<Vec<Expr>> {
        let mut out = Vec::new();
        if *self.peek() == close {
            return Ok(out);
        }
        loop {
            out.push(self.expr()?);
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        Ok(out)
    }

    fn expr(&mut self) -> PResult<Expr> {
        let mut e = self.unary()?;
        while self.eat(&Tok::Amp) {
            let rhs = self.unary()?;
            e = Expr::And(Box::new(e), Box::new(rhs));
        }
        Ok(e)
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.eat(&Tok::Bang) {
            return Ok(Expr::Not(Box::new(self.unary()?)));
        }
        self.atom()
    }

    fn atom(&mut self) -> PResult<Expr> {
        match self.peek().clone() {
            Tok::Ident(s) if s == "measure" => {
                self.bump();
                if self.eat(&Tok::LParen) {
                    let qs = self.ident_list()?;
                    self.expect(Tok::RParen)?;
                    Ok(Expr::Measure(qs.into_iter().map(Expr::Var).collect()))
                } else {
                    Ok(Expr::Measure(vec![Expr::Var(self.ident()?)]))
                }
            }
            Tok::Ident(s) => {
                self.bump();
                Ok(Expr::Var(s))
            }
            Tok::Number(n) if n == "0" || n == "1" => {
                self.bump();
                Ok(Expr::Bit(n == "1"))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            other => self.error(format!("expected an expression, found {}", other.describe())),
        }
    }
}
