//! Line-oriented model files:
//!
//! ```text
//! model "w"          # optional header
//! g[1] = 0
//! g[2] = t
//! g[4] = 3*t^2       # orders must be contiguous from 1
//! g[3] = 1/2*t - (t - 1/2)*t + t^2/2 - t/2
//! ```
//!
//! Expressions are polynomials in `t` with `+ - * ^`, parentheses, integer
//! literals and `p/q` literals. A `/` may only divide by an integer literal.

use std::collections::BTreeMap;

use num_traits::{One, ToPrimitive, Zero};

use super::{default_grid, MomentModel};
use crate::error::{MprError, Result};
use crate::poly::Poly;
use crate::{Rational, RationalFunctionOfTime, TimePolynomial};

/// Parse and validate a model file, including the feasibility check on the default grid.
pub fn parse_model(text: &str) -> Result<MomentModel> {
    let mut name: Option<String> = None;
    let mut orders: BTreeMap<usize, TimePolynomial> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("");
        if line.trim().is_empty() {
            continue;
        }
        let mut cur = Cursor::new(line, line_no);
        cur.skip_ws();
        if cur.eat_word("model") {
            if name.is_some() || !orders.is_empty() {
                return Err(cur.error("`model` header must come first and only once"));
            }
            cur.skip_ws();
            name = Some(cur.quoted()?);
            cur.expect_end()?;
            continue;
        }
        cur.expect('g')?;
        cur.expect('[')?;
        let n = cur.integer()?.to_usize().ok_or_else(|| cur.error("order out of range"))?;
        cur.expect(']')?;
        cur.expect('=')?;
        let p = cur.expr()?;
        cur.expect_end()?;
        if n == 0 {
            return Err(MprError::SyntaxError { line: line_no, col: 1, message: "g[0] is fixed to 1".into() });
        }
        if orders.insert(n, p).is_some() {
            return Err(MprError::DuplicateOrder(n));
        }
    }
    let top = *orders.keys().next_back().ok_or(MprError::MissingOrder(1))?;
    let mut g = vec![RationalFunctionOfTime::one()];
    for n in 1..=top {
        let p = orders.remove(&n).ok_or(MprError::MissingOrder(n))?;
        g.push(RationalFunctionOfTime::from_poly(p));
    }
    let model = MomentModel::new(name.unwrap_or_else(|| "model".into()), g)?;
    model.check_feasibility(&default_grid())?;
    Ok(model)
}

struct Cursor {
    chars: Vec<char>,
    pos: usize,
    line: usize,
}

impl Cursor {
    fn new(src: &str, line: usize) -> Self {
        Cursor { chars: src.chars().collect(), pos: 0, line }
    }

    fn error(&self, message: impl Into<String>) -> MprError {
        MprError::SyntaxError { line: self.line, col: self.pos + 1, message: message.into() }
    }

    fn skip_ws(&mut self) {
        while self.chars.get(self.pos).is_some_and(|c| c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            let msg = match self.peek() {
                Some(got) => format!("expected `{c}`, found `{got}`"),
                None => format!("expected `{c}`, found end of line"),
            };
            Err(self.error(msg))
        }
    }

    fn expect_end(&mut self) -> Result<()> {
        match self.peek() {
            None => Ok(()),
            Some(c) => Err(self.error(format!("unexpected `{c}`"))),
        }
    }

    fn eat_word(&mut self, w: &str) -> bool {
        let end = self.pos + w.len();
        if end <= self.chars.len()
            && self.chars[self.pos..end].iter().copied().eq(w.chars())
            && !self.chars.get(end).is_some_and(|c| c.is_alphanumeric() || *c == '_')
        {
            self.pos = end;
            true
        } else {
            false
        }
    }

    fn quoted(&mut self) -> Result<String> {
        self.expect('"')?;
        let start = self.pos;
        while let Some(&c) = self.chars.get(self.pos) {
            if c == '"' {
                let s: String = self.chars[start..self.pos].iter().collect();
                self.pos += 1;
                return Ok(s);
            }
            self.pos += 1;
        }
        Err(self.error("unterminated string"))
    }

    fn integer(&mut self) -> Result<num_bigint::BigInt> {
        self.skip_ws();
        let start = self.pos;
        while self.chars.get(self.pos).is_some_and(char::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error(match self.chars.get(self.pos) {
                Some(c) => format!("expected a number, found `{c}`"),
                None => "expected a number, found end of line".into(),
            }));
        }
        let digits: String = self.chars[start..self.pos].iter().collect();
        Ok(digits.parse().expect("ascii digits"))
    }

    fn expr(&mut self) -> Result<TimePolynomial> {
        let mut acc = self.term()?;
        loop {
            if self.eat('+') {
                acc = acc + self.term()?;
            } else if self.eat('-') {
                acc = acc - self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<TimePolynomial> {
        let mut acc = self.unary()?;
        loop {
            if self.eat('*') {
                acc = acc * self.unary()?;
            } else if self.peek() == Some('/') {
                let at = self.pos;
                self.pos += 1;
                let d = self.integer()?;
                if d.is_zero() {
                    self.pos = at;
                    return Err(self.error("division by zero"));
                }
                acc = acc.scale(&Rational::new(1.into(), d));
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<TimePolynomial> {
        if self.eat('-') {
            return Ok(-self.unary()?);
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<TimePolynomial> {
        let base = self.atom()?;
        if self.eat('^') {
            let e = self.integer()?;
            let e = e.to_u32().filter(|&e| e <= 64).ok_or_else(|| self.error("exponent too large"))?;
            return Ok(base.pow(e));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<TimePolynomial> {
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Some('t') => {
                if self.eat_word("t") {
                    Ok(Poly::var())
                } else {
                    Err(self.error("unknown identifier"))
                }
            }
            Some(c) if c.is_ascii_digit() => {
                let n = self.integer()?;
                Ok(Poly::constant(Rational::from_integer(n)))
            }
            Some(c) => Err(self.error(format!("unexpected `{c}`"))),
            None => Err(self.error("unexpected end of line")),
        }
    }
}
