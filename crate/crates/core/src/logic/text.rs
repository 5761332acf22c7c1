//! Lexer and recursive-descent reader for the canonical logical-form text.
//!
//! ```text
//! EXPR := IDENT | NUMBER | ent(IDENT) | join(IDENT, EXPR) | and(EXPR, EXPR)
//!       | count(EXPR) | max(EXPR) | min(EXPR)
//! ```

use thiserror::Error;

use super::form::LogicalForm;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("parse error at offset {pos}: {message}")]
pub struct ParseError {
    pub pos: usize,
    pub message: String,
}

impl ParseError {
    pub(crate) fn new(pos: usize, message: impl Into<String>) -> Self {
        ParseError { pos, message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Number(f64),
    Child(usize),
    LParen,
    RParen,
    Comma,
    Dot,
    End,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Number(n) => format!("number `{n}`"),
            Tok::Child(k) => format!("`${k}`"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Dot => "`.`".into(),
            Tok::End => "end of input".into(),
        }
    }
}

pub(crate) fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

pub(crate) fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

/// Splits `src` into tokens paired with their byte offsets.
pub(crate) fn lex(src: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes: Vec<(usize, char)> = src.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let (pos, c) = bytes[i];
        match c {
            c if c.is_whitespace() => i += 1,
            '(' => {
                out.push((pos, Tok::LParen));
                i += 1;
            }
            ')' => {
                out.push((pos, Tok::RParen));
                i += 1;
            }
            ',' => {
                out.push((pos, Tok::Comma));
                i += 1;
            }
            '.' => {
                out.push((pos, Tok::Dot));
                i += 1;
            }
            '$' => {
                let start = i + 1;
                let mut j = start;
                while j < bytes.len() && bytes[j].1.is_ascii_digit() {
                    j += 1;
                }
                if j == start {
                    return Err(ParseError::new(pos, "expected digits after `$`"));
                }
                let text: String = bytes[start..j].iter().map(|(_, c)| c).collect();
                let k = text
                    .parse()
                    .map_err(|_| ParseError::new(pos, format!("bad child reference `${text}`")))?;
                out.push((pos, Tok::Child(k)));
                i = j;
            }
            c if c.is_ascii_digit() || c == '-' => {
                let mut j = i + 1;
                while j < bytes.len() && bytes[j].1.is_ascii_digit() {
                    j += 1;
                }
                // a fractional part needs a digit after the dot, so `lam x. 1` stays intact
                if j + 1 < bytes.len() && bytes[j].1 == '.' && bytes[j + 1].1.is_ascii_digit() {
                    j += 1;
                    while j < bytes.len() && bytes[j].1.is_ascii_digit() {
                        j += 1;
                    }
                }
                let text: String = bytes[i..j].iter().map(|(_, c)| c).collect();
                let value: f64 = text
                    .parse()
                    .map_err(|_| ParseError::new(pos, format!("malformed number `{text}`")))?;
                out.push((pos, Tok::Number(value)));
                i = j;
            }
            c if is_ident_start(c) => {
                let mut j = i + 1;
                while j < bytes.len() && is_ident_char(bytes[j].1) {
                    j += 1;
                }
                out.push((pos, Tok::Ident(bytes[i..j].iter().map(|(_, c)| c).collect())));
                i = j;
            }
            other => return Err(ParseError::new(pos, format!("unexpected character `{other}`"))),
        }
    }
    out.push((src.len(), Tok::End));
    Ok(out)
}

/// Token cursor shared by the logical-form and template readers.
pub(crate) struct Cursor {
    toks: Vec<(usize, Tok)>,
    at: usize,
}

impl Cursor {
    pub(crate) fn new(src: &str) -> Result<Self, ParseError> {
        Ok(Cursor { toks: lex(src)?, at: 0 })
    }

    pub(crate) fn peek(&self) -> &Tok {
        &self.toks[self.at].1
    }

    pub(crate) fn pos(&self) -> usize {
        self.toks[self.at].0
    }

    pub(crate) fn next(&mut self) -> Tok {
        let tok = self.toks[self.at].1.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        tok
    }

    pub(crate) fn expect(&mut self, want: Tok) -> Result<(), ParseError> {
        let pos = self.pos();
        let got = self.next();
        if got == want {
            Ok(())
        } else {
            Err(ParseError::new(pos, format!("expected {}, found {}", want.describe(), got.describe())))
        }
    }

    pub(crate) fn ident(&mut self) -> Result<String, ParseError> {
        let pos = self.pos();
        match self.next() {
            Tok::Ident(s) => Ok(s),
            other => Err(ParseError::new(pos, format!("expected identifier, found {}", other.describe()))),
        }
    }

    pub(crate) fn finish(&mut self) -> Result<(), ParseError> {
        match self.peek() {
            Tok::End => Ok(()),
            other => Err(ParseError::new(self.pos(), format!("trailing input: {}", other.describe()))),
        }
    }
}

/// Reads a logical form from its canonical text.
pub fn parse_lf(src: &str) -> Result<LogicalForm, ParseError> {
    let mut cur = Cursor::new(src)?;
    let z = read_set(&mut cur)?;
    cur.finish()?;
    Ok(z)
}

fn read_set(cur: &mut Cursor) -> Result<LogicalForm, ParseError> {
    let pos = cur.pos();
    match cur.next() {
        Tok::Number(n) => Ok(LogicalForm::number(n)),
        Tok::Ident(name) => {
            if *cur.peek() != Tok::LParen {
                return Ok(LogicalForm::Unary(name));
            }
            cur.next();
            let z = match name.as_str() {
                "ent" => LogicalForm::Entity(cur.ident()?),
                "join" => {
                    let rel = cur.ident()?;
                    cur.expect(Tok::Comma)?;
                    LogicalForm::join(LogicalForm::Rel(rel), read_set(cur)?)
                }
                "and" => {
                    let a = read_set(cur)?;
                    cur.expect(Tok::Comma)?;
                    LogicalForm::and(a, read_set(cur)?)
                }
                "count" => LogicalForm::count(read_set(cur)?),
                "max" => LogicalForm::max(read_set(cur)?),
                "min" => LogicalForm::min(read_set(cur)?),
                other => return Err(ParseError::new(pos, format!("unknown operator `{other}`"))),
            };
            cur.expect(Tok::RParen)?;
            Ok(z)
        }
        other => Err(ParseError::new(pos, format!("expected expression, found {}", other.describe()))),
    }
}
