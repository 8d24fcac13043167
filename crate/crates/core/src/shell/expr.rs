//! Arithmetic expressions for coefficient functions `a_beta(x)`.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' ['-'] integer)?
//! primary := number | 'pi' | x_k | func '(' expr ')' | '(' expr ')'
//! func    := sin | cos | exp | abs
//! ```

use crate::error::{Error, Result};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Abs,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Abs => "abs",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CoefficientExpr {
    Num(f64),
    /// Zero-based index of `x_{k+1}`.
    Var(usize),
    Neg(Box<CoefficientExpr>),
    Add(Box<CoefficientExpr>, Box<CoefficientExpr>),
    Sub(Box<CoefficientExpr>, Box<CoefficientExpr>),
    Mul(Box<CoefficientExpr>, Box<CoefficientExpr>),
    Div(Box<CoefficientExpr>, Box<CoefficientExpr>),
    Pow(Box<CoefficientExpr>, i32),
    Call(Func, Box<CoefficientExpr>),
}

impl CoefficientExpr {
    pub fn eval(&self, x: &[f64]) -> f64 {
        use CoefficientExpr::*;
        match self {
            Num(v) => *v,
            Var(k) => x[*k],
            Neg(a) => -a.eval(x),
            Add(a, b) => a.eval(x) + b.eval(x),
            Sub(a, b) => a.eval(x) - b.eval(x),
            Mul(a, b) => a.eval(x) * b.eval(x),
            Div(a, b) => a.eval(x) / b.eval(x),
            Pow(a, n) => a.eval(x).powi(*n),
            Call(f, a) => {
                let v = a.eval(x);
                match f {
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                    Func::Exp => v.exp(),
                    Func::Abs => v.abs(),
                }
            }
        }
    }

    /// `Some(value)` when the expression does not depend on `x`.
    pub fn as_constant(&self) -> Option<f64> {
        use CoefficientExpr::*;
        let uses_var = |e: &CoefficientExpr| -> bool {
            fn walk(e: &CoefficientExpr) -> bool {
                match e {
                    Num(_) => false,
                    Var(_) => true,
                    Neg(a) | Pow(a, _) | Call(_, a) => walk(a),
                    Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) => walk(a) || walk(b),
                }
            }
            walk(e)
        };
        (!uses_var(self)).then(|| self.eval(&[]))
    }
}

impl fmt::Display for CoefficientExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use CoefficientExpr::*;
        match self {
            Num(v) => write!(f, "{v}"),
            Var(k) => write!(f, "x_{}", k + 1),
            Neg(a) => write!(f, "(-{a})"),
            Add(a, b) => write!(f, "({a} + {b})"),
            Sub(a, b) => write!(f, "({a} - {b})"),
            Mul(a, b) => write!(f, "({a} * {b})"),
            Div(a, b) => write!(f, "({a} / {b})"),
            Pow(a, n) => write!(f, "({a}^{n})"),
            Call(g, a) => write!(f, "{}({a})", g.name()),
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    dim: usize,
}

fn err(pos: usize, message: impl Into<String>) -> Error {
    Error::Parse { column: pos + 1, message: message.into() }
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<CoefficientExpr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = CoefficientExpr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(b'-') {
                lhs = CoefficientExpr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<CoefficientExpr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(b'*') {
                lhs = CoefficientExpr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat(b'/') {
                lhs = CoefficientExpr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<CoefficientExpr> {
        if self.eat(b'-') {
            return Ok(CoefficientExpr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<CoefficientExpr> {
        let base = self.primary()?;
        if !self.eat(b'^') {
            return Ok(base);
        }
        let neg = self.eat(b'-');
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(err(start, "expected an integer exponent after '^'"));
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
        let n: i32 = text.parse().map_err(|_| err(start, "exponent out of range"))?;
        Ok(CoefficientExpr::Pow(Box::new(base), if neg { -n } else { n }))
    }

    fn primary(&mut self) -> Result<CoefficientExpr> {
        let c = self.peek().ok_or_else(|| err(self.pos, "unexpected end of expression"))?;
        let start = self.pos;
        if c == b'(' {
            self.pos += 1;
            let e = self.expr()?;
            if !self.eat(b')') {
                return Err(err(self.pos, "expected ')'"));
            }
            return Ok(e);
        }
        if c.is_ascii_digit() || c == b'.' {
            return self.number();
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_') {
                self.pos += 1;
            }
            let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii identifier");
            let func = match name {
                "sin" => Some(Func::Sin),
                "cos" => Some(Func::Cos),
                "exp" => Some(Func::Exp),
                "abs" => Some(Func::Abs),
                _ => None,
            };
            if let Some(func) = func {
                if !self.eat(b'(') {
                    return Err(err(self.pos, format!("expected '(' after {name}")));
                }
                let arg = self.expr()?;
                if !self.eat(b')') {
                    return Err(err(self.pos, "expected ')'"));
                }
                return Ok(CoefficientExpr::Call(func, Box::new(arg)));
            }
            if name == "pi" {
                return Ok(CoefficientExpr::Num(std::f64::consts::PI));
            }
            if let Some(k) = name.strip_prefix("x_").and_then(|s| s.parse::<usize>().ok()) {
                if (1..=self.dim).contains(&k) {
                    return Ok(CoefficientExpr::Var(k - 1));
                }
            }
            return Err(Error::UnknownIdentifier(name.to_string()));
        }
        Err(err(start, format!("unexpected character '{}'", c as char)))
    }

    fn number(&mut self) -> Result<CoefficientExpr> {
        let start = self.pos;
        let s = self.src;
        let digits = |p: &mut usize| {
            while *p < s.len() && s[*p].is_ascii_digit() {
                *p += 1;
            }
        };
        digits(&mut self.pos);
        if self.pos < s.len() && s[self.pos] == b'.' {
            self.pos += 1;
            digits(&mut self.pos);
        }
        if self.pos < s.len() && (s[self.pos] == b'e' || s[self.pos] == b'E') {
            let save = self.pos;
            self.pos += 1;
            if self.pos < s.len() && (s[self.pos] == b'+' || s[self.pos] == b'-') {
                self.pos += 1;
            }
            let exp_start = self.pos;
            digits(&mut self.pos);
            if exp_start == self.pos {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&s[start..self.pos]).expect("ascii number");
        text.parse::<f64>()
            .map(CoefficientExpr::Num)
            .map_err(|_| err(start, format!("malformed number '{text}'")))
    }
}

/// Parses `text` over the variables `x_1 .. x_dim`.
pub fn parse_expr(text: &str, dim: usize) -> Result<CoefficientExpr> {
    let mut p = Parser { src: text.as_bytes(), pos: 0, dim };
    let e = p.expr()?;
    if let Some(c) = p.peek() {
        return Err(err(p.pos, format!("unexpected '{}' after expression", c as char)));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_and_powers() {
        let e = parse_expr("1 + 2*x_1^2 - -3/x_2", 2).unwrap();
        assert_eq!(e.eval(&[2.0, 3.0]), 1.0 + 8.0 + 1.0);
        assert_eq!(parse_expr("-2^2", 1).unwrap().eval(&[0.0]), -4.0);
        assert_eq!(parse_expr("2^-1", 1).unwrap().eval(&[0.0]), 0.5);
        assert_eq!(parse_expr("1.5e1", 1).unwrap().eval(&[0.0]), 15.0);
    }

    #[test]
    fn error_columns() {
        match parse_expr("1 + * 2", 1) {
            Err(Error::Parse { column, .. }) => assert_eq!(column, 5),
            other => panic!("{other:?}"),
        }
        match parse_expr("sin(x_1", 1) {
            Err(Error::Parse { column, .. }) => assert_eq!(column, 8),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_expr("y", 1), Err(Error::UnknownIdentifier(s)) if s == "y"));
    }

    #[test]
    fn constants_are_detected() {
        assert_eq!(parse_expr("2*pi", 1).unwrap().as_constant(), Some(2.0 * std::f64::consts::PI));
        assert_eq!(parse_expr("cos(x_1)", 1).unwrap().as_constant(), None);
    }
}
