//! Choices the environment makes when a process inputs from an interface channel.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::SemanticsError;

#[derive(Clone, Debug, PartialEq)]
pub enum PolicyKind {
    /// `alpha|0> + beta|1>`.
    Pure(Complex64, Complex64),
    /// One half of `(|00> + |11>)/sqrt 2`; the other half stays with the environment.
    Bell,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PolicyState {
    pub name: String,
    pub kind: PolicyKind,
}

impl PolicyState {
    pub fn pure(name: impl Into<String>, alpha: Complex64, beta: Complex64) -> Self {
        PolicyState { name: name.into(), kind: PolicyKind::Pure(alpha, beta) }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InputPolicy {
    pub qubit_states: Vec<PolicyState>,
    pub bit_values: Vec<bool>,
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

impl Default for InputPolicy {
    fn default() -> Self {
        InputPolicy::tomographic()
    }
}

impl InputPolicy {
    fn with(qubit_states: Vec<PolicyState>) -> Self {
        InputPolicy { qubit_states, bit_values: vec![false, true] }
    }

    /// `{|0>, |1>, |+>, |+i>}`, whose density matrices span all single-qubit densities.
    pub fn tomographic() -> Self {
        let h = FRAC_1_SQRT_2;
        InputPolicy::with(vec![
            PolicyState::pure("|0>", c(1., 0.), c(0., 0.)),
            PolicyState::pure("|1>", c(0., 0.), c(1., 0.)),
            PolicyState::pure("|+>", c(h, 0.), c(h, 0.)),
            PolicyState::pure("|+i>", c(h, 0.), c(0., h)),
        ])
    }

    pub fn basis() -> Self {
        InputPolicy::with(vec![
            PolicyState::pure("|0>", c(1., 0.), c(0., 0.)),
            PolicyState::pure("|1>", c(0., 0.), c(1., 0.)),
        ])
    }

    pub fn bell() -> Self {
        InputPolicy::with(vec![PolicyState { name: "bell".into(), kind: PolicyKind::Bell }])
    }

    /// `n` Haar-random pure states from a seeded generator.
    pub fn random(seed: u64, n: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let states = (0..n)
            .map(|k| {
                let g: Vec<f64> = (0..4).map(|_| StandardNormal.sample(&mut rng)).collect();
                let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
                PolicyState::pure(
                    format!("random({seed},{k})"),
                    c(g[0] / norm, g[1] / norm),
                    c(g[2] / norm, g[3] / norm),
                )
            })
            .collect();
        InputPolicy::with(states)
    }

    pub fn explicit(alpha: Complex64, beta: Complex64) -> Result<Self, SemanticsError> {
        let norm = (alpha.norm_sqr() + beta.norm_sqr()).sqrt();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(SemanticsError::Policy(format!(
                "amplitudes ({alpha}, {beta}) have norm {norm}, expected 1"
            )));
        }
        let name = format!("({}, {})", short(alpha), short(beta));
        Ok(InputPolicy::with(vec![PolicyState::pure(name, alpha, beta)]))
    }

    /// Parse a selector: `tomo`, `basis`, `bell`, `random:SEED[:N]` or
    /// `explicit:ALPHA,BETA` (optionally parenthesized, e.g. `explicit:(1/√2,1/√2)`).
    pub fn parse(selector: &str) -> Result<Self, SemanticsError> {
        let s = selector.trim();
        match s {
            "tomo" | "tomographic" => return Ok(InputPolicy::tomographic()),
            "basis" => return Ok(InputPolicy::basis()),
            "bell" => return Ok(InputPolicy::bell()),
            _ => {}
        }
        if let Some(rest) = s.strip_prefix("random:") {
            let mut parts = rest.split(':');
            let seed = parts
                .next()
                .and_then(|p| p.parse().ok())
                .ok_or_else(|| SemanticsError::Policy(format!("bad seed in `{s}`")))?;
            let n = match parts.next() {
                Some(p) => p.parse().map_err(|_| SemanticsError::Policy(format!("bad count in `{s}`")))?,
                None => 1,
            };
            return Ok(InputPolicy::random(seed, n));
        }
        if let Some(rest) = s.strip_prefix("explicit:") {
            let (a, b) = parse_amplitudes(rest).map_err(SemanticsError::Policy)?;
            return InputPolicy::explicit(a, b);
        }
        Err(SemanticsError::Policy(format!(
            "unknown policy `{s}` (expected tomo, basis, bell, random:SEED or explicit:ALPHA,BETA)"
        )))
    }

    /// Union of qubit states; later duplicates (by name) are dropped.
    pub fn merge(mut self, other: InputPolicy) -> Self {
        for st in other.qubit_states {
            if !self.qubit_states.iter().any(|s| s.name == st.name) {
                self.qubit_states.push(st);
            }
        }
        self
    }

    /// One single-state policy per qubit state.
    pub fn singletons(&self) -> Vec<InputPolicy> {
        self.qubit_states
            .iter()
            .map(|s| InputPolicy { qubit_states: vec![s.clone()], bit_values: self.bit_values.clone() })
            .collect()
    }

    pub fn names(&self) -> Vec<&str> {
        self.qubit_states.iter().map(|s| s.name.as_str()).collect()
    }
}

impl fmt::Display for InputPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.names().join(", "))
    }
}

fn short(z: Complex64) -> String {
    let r = |x: f64| (x * 1e6).round() / 1e6;
    crate::lang::fmt_complex(Complex64::new(r(z.re), r(z.im)))
}

/// Parse `a,b` or `(a,b)` where each amplitude is a small complex expression.
pub fn parse_amplitudes(text: &str) -> Result<(Complex64, Complex64), String> {
    let toks = tokenize(text)?;
    let attempt = |wrapped: bool| -> Result<(Complex64, Complex64), String> {
        let mut p = AmpParser { toks: &toks, pos: 0 };
        if wrapped {
            p.expect(&ATok::LParen)?;
        }
        let a = p.expr()?;
        p.expect(&ATok::Comma)?;
        let b = p.expr()?;
        if wrapped {
            p.expect(&ATok::RParen)?;
        }
        if p.pos != toks.len() {
            return Err(format!("unexpected trailing input in `{text}`"));
        }
        Ok((a, b))
    };
    if toks.first() == Some(&ATok::LParen) {
        if let Ok(v) = attempt(true) {
            return Ok(v);
        }
    }
    attempt(false)
}

#[derive(Clone, Debug, PartialEq)]
enum ATok {
    Num(f64),
    Ident(String),
    Sqrt,
    Plus,
    Minus,
    Star,
    Slash,
    LParen,
    RParen,
    Comma,
}

fn tokenize(text: &str) -> Result<Vec<ATok>, String> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let ch = chars[i];
        match ch {
            ' ' | '\t' => i += 1,
            '+' | '-' | '*' | '/' | '(' | ')' | ',' | '√' => {
                out.push(match ch {
                    '+' => ATok::Plus,
                    '-' => ATok::Minus,
                    '*' => ATok::Star,
                    '/' => ATok::Slash,
                    '(' => ATok::LParen,
                    ')' => ATok::RParen,
                    ',' => ATok::Comma,
                    _ => ATok::Sqrt,
                });
                i += 1;
            }
            d if d.is_ascii_digit() || d == '.' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        i = j;
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let s: String = chars[start..i].iter().collect();
                out.push(ATok::Num(s.parse().map_err(|_| format!("bad number `{s}`"))?));
            }
            a if a.is_ascii_alphabetic() => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_alphabetic() {
                    i += 1;
                }
                let w: String = chars[start..i].iter().collect();
                if w == "sqrt" {
                    out.push(ATok::Sqrt);
                } else {
                    out.push(ATok::Ident(w));
                }
            }
            other => return Err(format!("unexpected character `{other}` in amplitude")),
        }
    }
    Ok(out)
}

struct AmpParser<'a> {
    toks: &'a [ATok],
    pos: usize,
}

impl AmpParser<'_> {
    fn peek(&self) -> Option<&ATok> {
        self.toks.get(self.pos)
    }

    fn expect(&mut self, t: &ATok) -> Result<(), String> {
        if self.peek() == Some(t) {
            self.pos += 1;
            Ok(())
        } else {
            Err(format!("expected {t:?}, found {:?}", self.peek()))
        }
    }

    fn expr(&mut self) -> Result<Complex64, String> {
        let mut v = self.term()?;
        loop {
            match self.peek() {
                Some(ATok::Plus) => {
                    self.pos += 1;
                    v += self.term()?;
                }
                Some(ATok::Minus) => {
                    self.pos += 1;
                    v -= self.term()?;
                }
                _ => return Ok(v),
            }
        }
    }

    fn term(&mut self) -> Result<Complex64, String> {
        let mut v = self.unary()?;
        loop {
            match self.peek() {
                Some(ATok::Star) => {
                    self.pos += 1;
                    v *= self.unary()?;
                }
                Some(ATok::Slash) => {
                    self.pos += 1;
                    v /= self.unary()?;
                }
                _ => return Ok(v),
            }
        }
    }

    fn unary(&mut self) -> Result<Complex64, String> {
        match self.peek() {
            Some(ATok::Minus) => {
                self.pos += 1;
                Ok(-self.unary()?)
            }
            Some(ATok::Plus) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.postfix(),
        }
    }

    /// An atom optionally followed by a juxtaposed `i`, as in `0.8i`.
    fn postfix(&mut self) -> Result<Complex64, String> {
        let v = self.atom()?;
        if matches!(self.peek(), Some(ATok::Ident(w)) if w == "i") {
            self.pos += 1;
            return Ok(v * Complex64::i());
        }
        Ok(v)
    }

    fn atom(&mut self) -> Result<Complex64, String> {
        match self.peek().cloned() {
            Some(ATok::Num(x)) => {
                self.pos += 1;
                Ok(c(x, 0.))
            }
            Some(ATok::Ident(w)) => {
                self.pos += 1;
                match w.as_str() {
                    "i" => Ok(Complex64::i()),
                    "pi" => Ok(c(PI, 0.)),
                    "exp" => {
                        self.expect(&ATok::LParen)?;
                        let v = self.expr()?;
                        self.expect(&ATok::RParen)?;
                        Ok(v.exp())
                    }
                    _ => Err(format!("unknown name `{w}` in amplitude")),
                }
            }
            Some(ATok::Sqrt) => {
                self.pos += 1;
                Ok(self.postfix()?.sqrt())
            }
            Some(ATok::LParen) => {
                self.pos += 1;
                let v = self.expr()?;
                self.expect(&ATok::RParen)?;
                Ok(v)
            }
            other => Err(format!("unexpected {other:?} in amplitude")),
        }
    }
}
