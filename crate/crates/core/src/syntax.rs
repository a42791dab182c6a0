//! Tokenizer and the shared recursive-descent pieces used by every text
//! format: principals, labels, delegation contexts, constraint files and
//! surface programs.

use std::fmt;

use thiserror::Error;

use crate::principal::{AtomError, AtomName, Principal, RESERVED};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ParseError {
    /// Byte offset into the parsed text.
    pub offset: usize,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {} (byte {})", self.line, self.column, self.message, self.offset)
    }
}

impl ParseError {
    pub fn at(src: &str, offset: usize, message: impl Into<String>) -> Self {
        let (line, column) = line_col(src, offset);
        ParseError { offset, line, column, message: message.into() }
    }

    /// Re-anchors an error raised while parsing `full[base..]` to `full`.
    pub fn rebase(self, full: &str, base: usize) -> Self {
        ParseError::at(full, base + self.offset, self.message)
    }
}

/// Non-blank lines of `src` with `#` comments removed, paired with the byte
/// offset where each line starts.
pub fn content_lines(src: &str) -> impl Iterator<Item = (usize, &str)> {
    let mut start = 0;
    src.split_inclusive('\n').filter_map(move |raw| {
        let base = start;
        start += raw.len();
        let line = raw.split('#').next().unwrap_or("").trim_end();
        if line.trim().is_empty() {
            None
        } else {
            Some((base, line))
        }
    })
}

pub fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(src.len());
    let before = &src[..offset];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(offset, |nl| offset - nl - 1) + 1;
    (line, column)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Sym(&'static str),
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Int(n) => write!(f, "`{n}`"),
            Tok::Sym(s) => write!(f, "`{s}`"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub start: usize,
    pub end: usize,
}

// Longest symbols first.
const SYMBOLS: &[&str] = &[
    "==", ">=", "<=", "!=", "->", "&&", "||", "&", "|", "(", ")", "<", ">", ",", ";", ":", "=", "{", "}", ".", "+",
    "-", "*", "/", "%", "!", "?",
];

/// Splits `src` into tokens. `#` and `//` start comments running to the end of the line.
pub fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c == b'#' || (c == b'/' && bytes.get(i + 1) == Some(&b'/')) {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Token { tok: Tok::Ident(src[start..i].to_string()), start, end: i });
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let n = src[start..i].parse().map_err(|_| ParseError::at(src, start, "integer literal out of range"))?;
            out.push(Token { tok: Tok::Int(n), start, end: i });
            continue;
        }
        match SYMBOLS.iter().find(|s| src[i..].starts_with(**s)) {
            Some(s) => {
                out.push(Token { tok: Tok::Sym(s), start: i, end: i + s.len() });
                i += s.len();
            }
            None => {
                let ch = src[i..].chars().next().unwrap_or('?');
                return Err(ParseError::at(src, i, format!("unexpected character `{ch}`")));
            }
        }
    }
    Ok(out)
}

/// Cursor over a token stream with error reporting against the original text.
pub struct Cursor<'a> {
    src: &'a str,
    toks: Vec<Token>,
    pos: usize,
}

impl<'a> Cursor<'a> {
    pub fn new(src: &'a str) -> Result<Self, ParseError> {
        Ok(Cursor { src, toks: tokenize(src)?, pos: 0 })
    }

    pub fn src(&self) -> &'a str {
        self.src
    }

    pub fn peek(&self) -> Option<&Token> {
        self.toks.get(self.pos)
    }

    pub fn peek_at(&self, k: usize) -> Option<&Token> {
        self.toks.get(self.pos + k)
    }

    pub fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    pub fn offset(&self) -> usize {
        self.peek().map_or(self.src.len(), |t| t.start)
    }

    pub fn bump(&mut self) -> Option<Token> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    pub fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError::at(self.src, self.offset(), message)
    }

    pub fn unexpected(&self, wanted: &str) -> ParseError {
        match self.peek() {
            Some(t) => self.error(format!("expected {wanted}, found {}", t.tok)),
            None => self.error(format!("expected {wanted}, found end of input")),
        }
    }

    pub fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Token { tok: Tok::Sym(x), .. }) if *x == s)
    }

    pub fn is_ident(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Token { tok: Tok::Ident(x), .. }) if x == s)
    }

    pub fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub fn eat_ident(&mut self, s: &str) -> bool {
        if self.is_ident(s) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub fn expect_sym(&mut self, s: &str) -> Result<Token, ParseError> {
        if self.is_sym(s) {
            Ok(self.bump().expect("peeked"))
        } else {
            Err(self.unexpected(&format!("`{s}`")))
        }
    }

    pub fn expect_keyword(&mut self, s: &str) -> Result<Token, ParseError> {
        if self.is_ident(s) {
            Ok(self.bump().expect("peeked"))
        } else {
            Err(self.unexpected(&format!("`{s}`")))
        }
    }

    pub fn expect_ident(&mut self) -> Result<(String, usize), ParseError> {
        match self.peek() {
            Some(Token { tok: Tok::Ident(s), start, .. }) => {
                let r = (s.clone(), *start);
                self.pos += 1;
                Ok(r)
            }
            _ => Err(self.unexpected("identifier")),
        }
    }

    pub fn expect_end(&self) -> Result<(), ParseError> {
        if self.at_end() {
            Ok(())
        } else {
            Err(self.unexpected("end of input"))
        }
    }

    /// A projection suffix `->C` / `->I` written without interior whitespace.
    pub fn peek_projection(&self) -> Option<char> {
        let arrow = self.peek()?;
        let name = self.peek_at(1)?;
        match (&arrow.tok, &name.tok) {
            (Tok::Sym("->"), Tok::Ident(n)) if arrow.end == name.start && (n == "C" || n == "I") => n.chars().next(),
            _ => None,
        }
    }

    pub fn atom_name(&self, name: &str, offset: usize) -> Result<AtomName, ParseError> {
        AtomName::new(name).map_err(|e| match e {
            AtomError::Reserved(_) => {
                ParseError::at(self.src, offset, format!("reserved word `{name}` used as a principal name"))
            }
            AtomError::Invalid(_) => ParseError::at(self.src, offset, format!("invalid principal name `{name}`")),
        })
    }

    /// `P ::= atom | top | bot | P & P | P | P | ( P )`, `&` binding tighter.
    pub fn principal(&mut self) -> Result<Principal, ParseError> {
        let mut lhs = self.principal_conj()?;
        while self.eat_sym("|") {
            let rhs = self.principal_conj()?;
            lhs = lhs.disj(rhs);
        }
        Ok(lhs)
    }

    fn principal_conj(&mut self) -> Result<Principal, ParseError> {
        let mut lhs = self.principal_primary()?;
        while self.eat_sym("&") {
            let rhs = self.principal_primary()?;
            lhs = lhs.conj(rhs);
        }
        Ok(lhs)
    }

    fn principal_primary(&mut self) -> Result<Principal, ParseError> {
        if self.eat_sym("(") {
            let p = self.principal()?;
            self.expect_sym(")")?;
            return Ok(p);
        }
        let (name, at) = self.expect_ident().map_err(|_| self.unexpected("principal"))?;
        match name.as_str() {
            "top" => Ok(Principal::Top),
            "bot" => Ok(Principal::Bottom),
            _ => Ok(Principal::Atom(self.atom_name(&name, at)?)),
        }
    }
}

/// Parses a principal with grammar `P ::= atom | "top" | "bot" | P "&" P | P "|" P | "(" P ")"`.
pub fn parse_principal(text: &str) -> Result<Principal, ParseError> {
    let mut c = Cursor::new(text)?;
    let p = c.principal()?;
    c.expect_end()?;
    Ok(p)
}

pub fn is_reserved(name: &str) -> bool {
    RESERVED.contains(&name)
}
