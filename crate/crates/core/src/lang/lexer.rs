use super::ast::Span;
use super::error::LangError;

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Ident(String),
    /// Numeric literal, kept as written so `0`/`1` can be told apart from reals.
    Number(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Comma,
    Dot,
    Colon,
    Eq,
    Bang,
    Question,
    Caret,
    Amp,
    Par,
    StarEq,
    Plus,
    Minus,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Number(n) => format!("`{n}`"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Bang => "`!`".into(),
            Tok::Question => "`?`".into(),
            Tok::Caret => "`^`".into(),
            Tok::Amp => "`&`".into(),
            Tok::Par => "`||`".into(),
            Tok::StarEq => "`*=`".into(),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

pub fn lex(src: &str) -> Result<Vec<Token>, LangError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);

    while i < chars.len() {
        let c = chars[i];
        let span = Span::new(line, col);
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            col += i - start;
            out.push(Token { tok: Tok::Ident(word), span });
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i + 1 < chars.len() && chars[i] == '.' && chars[i + 1].is_ascii_digit() {
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
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
            let text: String = chars[start..i].iter().collect();
            col += i - start;
            out.push(Token { tok: Tok::Number(text), span });
            continue;
        }
        let next = chars.get(i + 1).copied();
        let (tok, width) = match (c, next) {
            ('|', Some('|')) => (Tok::Par, 2),
            ('*', Some('=')) => (Tok::StarEq, 2),
            ('(', _) => (Tok::LParen, 1),
            (')', _) => (Tok::RParen, 1),
            ('[', _) => (Tok::LBracket, 1),
            (']', _) => (Tok::RBracket, 1),
            ('{', _) => (Tok::LBrace, 1),
            ('}', _) => (Tok::RBrace, 1),
            (',', _) => (Tok::Comma, 1),
            ('.', _) => (Tok::Dot, 1),
            (':', _) => (Tok::Colon, 1),
            ('=', _) => (Tok::Eq, 1),
            ('!', _) => (Tok::Bang, 1),
            ('?', _) => (Tok::Question, 1),
            ('^', _) => (Tok::Caret, 1),
            ('&', _) => (Tok::Amp, 1),
            ('+', _) => (Tok::Plus, 1),
            ('-', _) => (Tok::Minus, 1),
            _ => {
                return Err(LangError::Syntax {
                    span,
                    msg: format!("unexpected character `{c}`"),
                })
            }
        };
        i += width;
        col += width;
        out.push(Token { tok, span });
    }
    out.push(Token { tok: Tok::Eof, span: Span::new(line, col) });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexes_prefixes_and_comments() {
        let toks: Vec<Tok> = lex("a?[x:Qbit] # comment\n.d![x].0 || {x,y *= CNot}")
            .unwrap()
            .into_iter()
            .map(|t| t.tok)
            .collect();
        assert_eq!(toks[0], Tok::Ident("a".into()));
        assert_eq!(toks[1], Tok::Question);
        assert!(toks.contains(&Tok::Par));
        assert!(toks.contains(&Tok::StarEq));
        assert_eq!(*toks.last().unwrap(), Tok::Eof);
    }

    #[test]
    fn numbers_with_exponents() {
        let toks = lex("1.5e-3 0 0.25").unwrap();
        assert_eq!(toks[0].tok, Tok::Number("1.5e-3".into()));
        assert_eq!(toks[1].tok, Tok::Number("0".into()));
        assert_eq!(toks[2].tok, Tok::Number("0.25".into()));
    }

    #[test]
    fn tracks_line_and_column() {
        let toks = lex("process\n  P").unwrap();
        assert_eq!((toks[1].span.line, toks[1].span.col), (2, 3));
    }

    #[test]
    fn rejects_stray_characters() {
        assert!(matches!(lex("a ~ b"), Err(LangError::Syntax { .. })));
    }
}
