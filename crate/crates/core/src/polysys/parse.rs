//! Recursive-descent parser for polynomial expressions.
//!
//! Grammar:
//! ```text
//! expr   := ['+'|'-'] term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := atom ('^' uint)?
//! atom   := number | ident | '(' expr ')' | ('+'|'-') factor
//! ```
//! Division is accepted only when the divisor is a non-zero constant.

use super::error::PolyError;
use super::poly::{Polynomial, VarSpace};

pub fn parse_polynomial(text: &str, space: &VarSpace) -> Result<Polynomial, PolyError> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
        space,
    };
    p.skip_ws();
    if p.at_end() {
        return Err(PolyError::Empty);
    }
    let poly = p.expr()?;
    p.skip_ws();
    if !p.at_end() {
        return Err(p.syntax(format!("unexpected `{}`", p.peek_char())));
    }
    Ok(poly)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    space: &'a VarSpace,
}

impl Parser<'_> {
    fn dim(&self) -> usize {
        self.space.dim()
    }

    fn at_end(&self) -> bool {
        self.pos >= self.src.len()
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn peek_char(&self) -> char {
        std::str::from_utf8(&self.src[self.pos..])
            .ok()
            .and_then(|s| s.chars().next())
            .unwrap_or('?')
    }

    fn column(&self) -> usize {
        self.pos + 1
    }

    fn syntax(&self, message: String) -> PolyError {
        PolyError::Syntax {
            message,
            column: self.column(),
        }
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(b' ' | b'\t' | b'\r' | b'\n')) {
            self.pos += 1;
        }
    }

    fn expr(&mut self) -> Result<Polynomial, PolyError> {
        self.skip_ws();
        let mut acc = self.term()?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    acc = &acc + &rhs;
                }
                Some(b'-') => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    acc = &acc - &rhs;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Polynomial, PolyError> {
        let mut acc = self.factor()?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    let rhs = self.factor()?;
                    acc = &acc * &rhs;
                }
                Some(b'/') => {
                    self.pos += 1;
                    self.skip_ws();
                    let column = self.column();
                    let rhs = self.factor()?;
                    match rhs.as_constant() {
                        Some(c) if c != 0.0 => acc = acc.scale(1.0 / c),
                        _ => return Err(PolyError::NonConstantDivision { column }),
                    }
                }
                _ => return Ok(acc),
            }
        }
    }

    fn factor(&mut self) -> Result<Polynomial, PolyError> {
        let base = self.atom()?;
        self.skip_ws();
        if self.peek() == Some(b'^') {
            self.pos += 1;
            self.skip_ws();
            let column = self.column();
            let start = self.pos;
            while matches!(self.peek(), Some(b'0'..=b'9')) {
                self.pos += 1;
            }
            if start == self.pos {
                return Err(PolyError::MalformedExponent { column });
            }
            if matches!(self.peek(), Some(b'.' | b'e' | b'E'))
                || self.peek().is_some_and(|c| c.is_ascii_alphabetic())
            {
                return Err(PolyError::MalformedExponent { column });
            }
            let digits = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
            let e: u32 = digits
                .parse()
                .map_err(|_| PolyError::MalformedExponent { column })?;
            return Ok(base.pow(e));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Polynomial, PolyError> {
        self.skip_ws();
        match self.peek() {
            None => Err(self.syntax("unexpected end of input".into())),
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                self.skip_ws();
                if self.peek() != Some(b')') {
                    return Err(self.syntax("expected `)`".into()));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(b'-') => {
                self.pos += 1;
                Ok(-&self.factor()?)
            }
            Some(b'+') => {
                self.pos += 1;
                self.factor()
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.ident(),
            Some(_) => Err(self.syntax(format!("unexpected `{}`", self.peek_char()))),
        }
    }

    fn number(&mut self) -> Result<Polynomial, PolyError> {
        let start = self.pos;
        let column = self.column();
        while matches!(self.peek(), Some(b'0'..=b'9' | b'.')) {
            self.pos += 1;
        }
        if matches!(self.peek(), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if matches!(self.peek(), Some(b'0'..=b'9')) {
                while matches!(self.peek(), Some(b'0'..=b'9')) {
                    self.pos += 1;
                }
            } else {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let value: f64 = text.parse().map_err(|_| PolyError::Syntax {
            message: format!("malformed number `{text}`"),
            column,
        })?;
        if !value.is_finite() {
            return Err(PolyError::Syntax {
                message: format!("number `{text}` is out of range"),
                column,
            });
        }
        Ok(Polynomial::constant(self.dim(), value))
    }

    fn ident(&mut self) -> Result<Polynomial, PolyError> {
        let start = self.pos;
        let column = self.column();
        while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == b'_') {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        match self.space.index_of(name) {
            Some(slot) => Ok(Polynomial::var(self.dim(), slot)),
            None => Err(PolyError::UnknownIdentifier {
                name: name.to_string(),
                column,
            }),
        }
    }
}
