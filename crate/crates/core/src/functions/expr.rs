//! A small arithmetic expression language over variables `x1 … xd`.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := ('-' | '+') unary | power
//! power   := atom ('^' unary)?          exponent must fold to a constant
//! atom    := number | 'x' digits | name '(' expr ')' | '(' expr ')'
//! name    := exp | log | sin | cos | neg
//! ```
//!
//! So `-x1^2` is `-(x1^2)` and `2^-1` is `0.5`. Exponents are restricted to
//! constants so that every partial derivative stays inside the language.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    /// Zero-based variable index; printed as `x{i+1}`.
    Var(usize),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, f64),
    Neg(Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        let v = match self {
            Expr::Const(c) => *c,
            Expr::Var(i) => x[*i],
            Expr::Add(a, b) => a.eval(x)? + b.eval(x)?,
            Expr::Sub(a, b) => a.eval(x)? - b.eval(x)?,
            Expr::Mul(a, b) => a.eval(x)? * b.eval(x)?,
            Expr::Div(a, b) => {
                let den = b.eval(x)?;
                if den == 0.0 {
                    return Err(domain(x, "division by zero"));
                }
                a.eval(x)? / den
            }
            Expr::Pow(a, n) => a.eval(x)?.powf(*n),
            Expr::Neg(a) => -a.eval(x)?,
            Expr::Call(f, a) => {
                let v = a.eval(x)?;
                match f {
                    Func::Exp => v.exp(),
                    Func::Log => {
                        if v <= 0.0 {
                            return Err(domain(x, &format!("log of nonpositive value {v}")));
                        }
                        v.ln()
                    }
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(domain(x, &format!("non-finite result in `{self}`")))
        }
    }

    /// Largest zero-based variable index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Const(_) => None,
            Expr::Var(i) => Some(*i),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.max_var().max(b.max_var())
            }
            Expr::Pow(a, _) | Expr::Neg(a) | Expr::Call(_, a) => a.max_var(),
        }
    }

    /// Exact partial derivative with respect to the zero-based variable `var`.
    pub fn derivative(&self, var: usize) -> Expr {
        match self {
            Expr::Const(_) => Expr::Const(0.0),
            Expr::Var(i) => Expr::Const(if *i == var { 1.0 } else { 0.0 }),
            Expr::Add(a, b) => add(a.derivative(var), b.derivative(var)),
            Expr::Sub(a, b) => sub(a.derivative(var), b.derivative(var)),
            Expr::Mul(a, b) => add(
                mul(a.derivative(var), (**b).clone()),
                mul((**a).clone(), b.derivative(var)),
            ),
            Expr::Div(a, b) => div(
                sub(
                    mul(a.derivative(var), (**b).clone()),
                    mul((**a).clone(), b.derivative(var)),
                ),
                pow((**b).clone(), 2.0),
            ),
            Expr::Pow(a, n) => mul(
                mul(Expr::Const(*n), pow((**a).clone(), n - 1.0)),
                a.derivative(var),
            ),
            Expr::Neg(a) => neg(a.derivative(var)),
            Expr::Call(f, a) => {
                let inner = a.derivative(var);
                let outer = match f {
                    Func::Exp => call(Func::Exp, (**a).clone()),
                    Func::Log => return div(inner, (**a).clone()),
                    Func::Sin => call(Func::Cos, (**a).clone()),
                    Func::Cos => neg(call(Func::Sin, (**a).clone())),
                };
                mul(outer, inner)
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Const(c) if *c < 0.0 || (*c == 0.0 && c.is_sign_negative()) => 3,
            Expr::Pow(..) => 4,
            _ => 5,
        }
    }
}

fn domain(x: &[f64], message: &str) -> Error {
    Error::Domain {
        point: x.to_vec(),
        message: message.to_string(),
    }
}

fn is_const(e: &Expr, v: f64) -> bool {
    matches!(e, Expr::Const(c) if *c == v)
}

fn add(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), Expr::Const(y)) => Expr::Const(x + y),
        _ if is_const(&a, 0.0) => b,
        _ if is_const(&b, 0.0) => a,
        _ => Expr::Add(Box::new(a), Box::new(b)),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), Expr::Const(y)) => Expr::Const(x - y),
        _ if is_const(&b, 0.0) => a,
        _ if is_const(&a, 0.0) => neg(b),
        _ => Expr::Sub(Box::new(a), Box::new(b)),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), Expr::Const(y)) => Expr::Const(x * y),
        _ if is_const(&a, 0.0) || is_const(&b, 0.0) => Expr::Const(0.0),
        _ if is_const(&a, 1.0) => b,
        _ if is_const(&b, 1.0) => a,
        _ if is_const(&a, -1.0) => neg(b),
        _ if is_const(&b, -1.0) => neg(a),
        _ => Expr::Mul(Box::new(a), Box::new(b)),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), Expr::Const(y)) if *y != 0.0 => Expr::Const(x / y),
        _ if is_const(&a, 0.0) => Expr::Const(0.0),
        _ if is_const(&b, 1.0) => a,
        _ => Expr::Div(Box::new(a), Box::new(b)),
    }
}

fn pow(a: Expr, n: f64) -> Expr {
    match &a {
        _ if n == 0.0 => Expr::Const(1.0),
        _ if n == 1.0 => a,
        Expr::Const(c) if c.powf(n).is_finite() => Expr::Const(c.powf(n)),
        _ => Expr::Pow(Box::new(a), n),
    }
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Const(c) => Expr::Const(-c),
        Expr::Neg(inner) => *inner,
        other => Expr::Neg(Box::new(other)),
    }
}

fn call(f: Func, a: Expr) -> Expr {
    Expr::Call(f, Box::new(a))
}

fn fmt_const(f: &mut fmt::Formatter<'_>, c: f64) -> fmt::Result {
    if c.fract() == 0.0 && c.abs() < 1e15 {
        write!(f, "{}", c as i64)
    } else {
        write!(f, "{c:?}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let wrap = |f: &mut fmt::Formatter<'_>, e: &Expr, min: u8| -> fmt::Result {
            if e.precedence() < min {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        };
        match self {
            Expr::Const(c) => fmt_const(f, *c),
            Expr::Var(i) => write!(f, "x{}", i + 1),
            Expr::Add(a, b) => {
                wrap(f, a, 1)?;
                write!(f, " + ")?;
                wrap(f, b, 2)
            }
            Expr::Sub(a, b) => {
                wrap(f, a, 1)?;
                write!(f, " - ")?;
                wrap(f, b, 2)
            }
            Expr::Mul(a, b) => {
                wrap(f, a, 2)?;
                write!(f, "*")?;
                wrap(f, b, 3)
            }
            Expr::Div(a, b) => {
                wrap(f, a, 2)?;
                write!(f, "/")?;
                wrap(f, b, 3)
            }
            Expr::Pow(a, n) => {
                wrap(f, a, 5)?;
                write!(f, "^")?;
                if *n < 0.0 {
                    write!(f, "(")?;
                    fmt_const(f, *n)?;
                    write!(f, ")")
                } else {
                    fmt_const(f, *n)
                }
            }
            Expr::Neg(a) => {
                write!(f, "-")?;
                wrap(f, a, 4)
            }
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

/// Parses `text` into an expression over `x1 … x{arity}`.
pub fn parse(text: &str, arity: usize) -> Result<Expr> {
    if text.trim().is_empty() {
        return Err(Error::Syntax {
            offset: 0,
            message: "empty expression".into(),
        });
    }
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
        arity,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.error(format!("unexpected `{}`", p.src[p.pos] as char)));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    arity: usize,
}

impl Parser<'_> {
    fn error(&self, message: String) -> Error {
        Error::Syntax {
            offset: self.pos,
            message,
        }
    }

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

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(b'-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(b'*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat(b'/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat(b'-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.eat(b'+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if !self.eat(b'^') {
            return Ok(base);
        }
        self.skip_ws();
        let at = self.pos;
        let exponent = self.unary()?;
        if exponent.max_var().is_some() {
            return Err(Error::Syntax {
                offset: at,
                message: "exponent must be a constant".into(),
            });
        }
        let n = exponent.eval(&[]).map_err(|_| Error::Syntax {
            offset: at,
            message: "exponent does not evaluate to a finite constant".into(),
        })?;
        Ok(Expr::Pow(Box::new(base), n))
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek() {
            None => Err(self.error("unexpected end of input".into())),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.error("expected `)`".into()));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.identifier(),
            Some(c) => Err(self.error(format!("unexpected `{}`", c as char))),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        let s = self.src;
        while self.pos < s.len() && (s[self.pos].is_ascii_digit() || s[self.pos] == b'.') {
            self.pos += 1;
        }
        if self.pos < s.len() && (s[self.pos] == b'e' || s[self.pos] == b'E') {
            let mark = self.pos;
            self.pos += 1;
            if self.pos < s.len() && (s[self.pos] == b'+' || s[self.pos] == b'-') {
                self.pos += 1;
            }
            let digits = self.pos;
            while self.pos < s.len() && s[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if digits == self.pos {
                self.pos = mark;
            }
        }
        let text = std::str::from_utf8(&s[start..self.pos]).expect("ascii");
        text.parse::<f64>().map(Expr::Const).map_err(|_| Error::Syntax {
            offset: start,
            message: format!("malformed number `{text}`"),
        })
    }

    fn identifier(&mut self) -> Result<Expr> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        if let Some(digits) = name.strip_prefix('x') {
            if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
                let index: usize = digits.parse().map_err(|_| Error::Syntax {
                    offset: start,
                    message: format!("bad variable `{name}`"),
                })?;
                if index == 0 || index > self.arity {
                    return Err(Error::UnknownVariable {
                        index,
                        arity: self.arity,
                    });
                }
                return Ok(Expr::Var(index - 1));
            }
        }
        let func = match name {
            "exp" => Some(Func::Exp),
            "log" => Some(Func::Log),
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            "neg" => None,
            _ => return Err(Error::UnknownFunction(name.to_string())),
        };
        if !self.eat(b'(') {
            return Err(self.error(format!("expected `(` after `{name}`")));
        }
        let arg = self.expr()?;
        if !self.eat(b')') {
            return Err(self.error("expected `)`".into()));
        }
        Ok(match func {
            Some(f) => Expr::Call(f, Box::new(arg)),
            None => Expr::Neg(Box::new(arg)),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(text: &str, x: &[f64]) -> f64 {
        parse(text, x.len().max(1)).unwrap().eval(x).unwrap()
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(ev("x1 + 2*x2", &[1.0, 3.0]), 7.0);
        assert_eq!(ev("-x1^2", &[3.0]), -9.0);
        assert_eq!(ev("2^3^2", &[0.0]), 512.0);
        assert_eq!(ev("8 - 3 - 2", &[0.0]), 3.0);
        assert_eq!(ev("8 / 4 / 2", &[0.0]), 1.0);
        assert_eq!(ev("2^-1", &[0.0]), 0.5);
        assert_eq!(ev("neg(x1) * 2", &[4.0]), -8.0);
        assert_eq!(ev("1.5e1 + .5", &[0.0]), 15.5);
    }

    #[test]
    fn syntax_errors_carry_offsets() {
        match parse("x1 + x2 +", 2) {
            Err(Error::Syntax { offset, .. }) => assert_eq!(offset, 9),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse("(x1", 1), Err(Error::Syntax { offset: 3, .. })));
        assert!(matches!(parse("x1 ^ x1", 1), Err(Error::Syntax { offset: 5, .. })));
        assert!(matches!(parse("x3", 2), Err(Error::UnknownVariable { index: 3, arity: 2 })));
        assert!(matches!(parse("x0", 2), Err(Error::UnknownVariable { index: 0, .. })));
        assert!(matches!(parse("tan(x1)", 1), Err(Error::UnknownFunction(_))));
        assert!(matches!(parse("   ", 1), Err(Error::Syntax { .. })));
        assert!(matches!(parse("x1 $", 1), Err(Error::Syntax { offset: 3, .. })));
    }

    #[test]
    fn domain_errors() {
        let e = parse("log(x1)", 1).unwrap();
        assert!(matches!(e.eval(&[-1.0]), Err(Error::Domain { .. })));
        let e = parse("1/x1", 1).unwrap();
        assert!(matches!(e.eval(&[0.0]), Err(Error::Domain { .. })));
        let e = parse("x1^0.5", 1).unwrap();
        assert!(matches!(e.eval(&[-4.0]), Err(Error::Domain { .. })));
    }

    #[test]
    fn derivatives_simplify() {
        let e = parse("x1*x2", 2).unwrap();
        assert_eq!(e.derivative(0).to_string(), "x2");
        assert_eq!(e.derivative(1).to_string(), "x1");
        let e = parse("exp(x1)", 1).unwrap();
        assert_eq!(e.derivative(0).to_string(), "exp(x1)");
        let e = parse("x1^3", 1).unwrap();
        assert_eq!(e.derivative(0).to_string(), "3*x1^2");
        let e = parse("x2 + 4", 2).unwrap();
        assert_eq!(e.derivative(0), Expr::Const(0.0));
    }

    #[test]
    fn printing_round_trips() {
        for text in [
            "x1 - (x2 - x1)",
            "-x1^2",
            "(-x1)^2",
            "x1/(x2*x1)",
            "2^-1*x1",
            "(x1^2)^3",
            "--x1",
            "exp(-x1) - -2",
            "x1^(-0.5) * 1e-7",
        ] {
            let e = parse(text, 2).unwrap();
            let back = parse(&e.to_string(), 2).unwrap();
            assert_eq!(back, e, "{text} printed as {e}");
        }
    }
}
