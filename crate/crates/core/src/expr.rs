//! Whitelisted scalar expressions of a point.
//!
//! Boundary data `g(y)`, spatial scalings `f(x)` and candidate solutions are
//! written in a deliberately small language:
//!
//! - numbers, `pi`
//! - coordinates `x`, `y`, `z`, the norm `r = |x|` and its square `r2 = |x|²`
//! - `+ - * /`, unary minus, `^` (right associative)
//! - `abs(a)`, `sqrt(a)`, `min(a, b, ...)`, `max(a, b, ...)`
//!
//! This covers constants, radial polynomials in `|x|²`, componentwise affine
//! maps, cones `|x - c|` and their min/max compositions.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
enum Node {
    Num(f64),
    Var(Var),
    Neg(Box<Node>),
    Bin(Op, Box<Node>, Box<Node>),
    Call(Func, Vec<Node>),
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Var {
    X,
    Y,
    Z,
    R,
    R2,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Op {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Func {
    Abs,
    Sqrt,
    Min,
    Max,
}

/// A parsed expression; equality and serialization go through the source text.
#[derive(Clone)]
pub struct Expr {
    source: String,
    root: Node,
}

impl Expr {
    pub fn parse(source: &str) -> Result<Self> {
        let tokens = tokenize(source)?;
        let mut parser = Parser { tokens, pos: 0 };
        let root = parser.expr()?;
        if parser.pos != parser.tokens.len() {
            return Err(Error::Schema(format!(
                "unexpected trailing input in expression `{source}`"
            )));
        }
        Ok(Self {
            source: source.trim().to_string(),
            root,
        })
    }

    pub fn constant(value: f64) -> Self {
        Self {
            source: format_constant(value),
            root: Node::Num(value),
        }
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// `Some(c)` when the expression does not depend on the point.
    pub fn as_constant(&self) -> Option<f64> {
        fn fold(n: &Node) -> Option<f64> {
            match n {
                Node::Num(v) => Some(*v),
                Node::Var(_) => None,
                Node::Neg(a) => fold(a).map(|v| -v),
                Node::Bin(op, a, b) => Some(apply(*op, fold(a)?, fold(b)?)),
                Node::Call(f, args) => {
                    let vals: Option<Vec<f64>> = args.iter().map(fold).collect();
                    Some(call(*f, &vals?))
                }
            }
        }
        fold(&self.root)
    }

    pub fn eval(&self, point: &[f64]) -> f64 {
        eval(&self.root, point)
    }
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.source == other.source
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({:?})", self.source)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

impl Serialize for Expr {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.source)
    }
}

impl<'de> Deserialize<'de> for Expr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Expr::constant(v)),
            Raw::Text(s) => Expr::parse(&s).map_err(serde::de::Error::custom),
        }
    }
}

fn format_constant(v: f64) -> String {
    let s = format!("{v:?}");
    if v < 0.0 {
        format!("({s})")
    } else {
        s
    }
}

fn coord(point: &[f64], i: usize) -> f64 {
    point.get(i).copied().unwrap_or(0.0)
}

fn eval(n: &Node, p: &[f64]) -> f64 {
    match n {
        Node::Num(v) => *v,
        Node::Var(v) => match v {
            Var::X => coord(p, 0),
            Var::Y => coord(p, 1),
            Var::Z => coord(p, 2),
            Var::R => p.iter().map(|c| c * c).sum::<f64>().sqrt(),
            Var::R2 => p.iter().map(|c| c * c).sum::<f64>(),
        },
        Node::Neg(a) => -eval(a, p),
        Node::Bin(op, a, b) => apply(*op, eval(a, p), eval(b, p)),
        Node::Call(f, args) => {
            let vals: Vec<f64> = args.iter().map(|a| eval(a, p)).collect();
            call(*f, &vals)
        }
    }
}

fn apply(op: Op, a: f64, b: f64) -> f64 {
    match op {
        Op::Add => a + b,
        Op::Sub => a - b,
        Op::Mul => a * b,
        Op::Div => a / b,
        Op::Pow => {
            if b.fract() == 0.0 && b.abs() <= 64.0 {
                a.powi(b as i32)
            } else {
                a.powf(b)
            }
        }
    }
}

fn call(f: Func, vals: &[f64]) -> f64 {
    match f {
        Func::Abs => vals[0].abs(),
        Func::Sqrt => vals[0].sqrt(),
        Func::Min => vals.iter().copied().fold(f64::INFINITY, f64::min),
        Func::Max => vals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
}

fn tokenize(src: &str) -> Result<Vec<Tok>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
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
            let text: String = chars[start..i].iter().collect();
            let v = text
                .parse::<f64>()
                .map_err(|_| Error::Schema(format!("bad number `{text}` in `{src}`")))?;
            out.push(Tok::Num(v));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Tok::Ident(chars[start..i].iter().collect()));
        } else if "+-*/^(),".contains(c) {
            out.push(Tok::Sym(c));
            i += 1;
        } else {
            return Err(Error::Schema(format!(
                "unexpected character `{c}` in expression `{src}`"
            )));
        }
    }
    if out.is_empty() {
        return Err(Error::Schema("empty expression".into()));
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
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
            Err(Error::Schema(format!(
                "expected `{c}` at token {} of expression",
                self.pos
            )))
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Node::Bin(Op::Add, Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Node::Bin(Op::Sub, Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Node::Bin(Op::Mul, Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Node::Bin(Op::Div, Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Node> {
        if self.eat('-') {
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if self.eat('^') {
            let exp = self.unary()?;
            return Ok(Node::Bin(Op::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        match self.tokens.get(self.pos).cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Node::Num(v))
            }
            Some(Tok::Sym('(')) => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect(')')?;
                Ok(inner)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                let var = match name.as_str() {
                    "x" => Some(Var::X),
                    "y" => Some(Var::Y),
                    "z" => Some(Var::Z),
                    "r" => Some(Var::R),
                    "r2" => Some(Var::R2),
                    _ => None,
                };
                if let Some(v) = var {
                    return Ok(Node::Var(v));
                }
                if name == "pi" {
                    return Ok(Node::Num(std::f64::consts::PI));
                }
                let func = match name.as_str() {
                    "abs" => Func::Abs,
                    "sqrt" => Func::Sqrt,
                    "min" => Func::Min,
                    "max" => Func::Max,
                    other => {
                        return Err(Error::Schema(format!(
                            "identifier `{other}` is not in the expression whitelist"
                        )))
                    }
                };
                self.expect('(')?;
                let mut args = vec![self.expr()?];
                while self.eat(',') {
                    args.push(self.expr()?);
                }
                self.expect(')')?;
                let arity_ok = match func {
                    Func::Abs | Func::Sqrt => args.len() == 1,
                    Func::Min | Func::Max => !args.is_empty(),
                };
                if !arity_ok {
                    return Err(Error::Schema(format!("wrong number of arguments to `{name}`")));
                }
                Ok(Node::Call(func, args))
            }
            _ => Err(Error::Schema(format!(
                "unexpected token at position {} of expression",
                self.pos
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_and_precedence() {
        let e = Expr::parse("1 + 2*x^2 - y/4").unwrap();
        assert_eq!(e.eval(&[3.0, 8.0]), 1.0 + 18.0 - 2.0);
        let e = Expr::parse("-2^2").unwrap();
        assert_eq!(e.eval(&[0.0, 0.0]), -4.0);
        let e = Expr::parse("2^3^2").unwrap();
        assert_eq!(e.eval(&[]), 512.0);
    }

    #[test]
    fn radial_and_functions() {
        let e = Expr::parse("1 + r2").unwrap();
        assert_eq!(e.eval(&[0.3, 0.4]), 1.25);
        let e = Expr::parse("sqrt((x-1)^2 + y^2)").unwrap();
        assert!((e.eval(&[0.0, 0.0]) - 1.0).abs() < 1e-15);
        let e = Expr::parse("max(abs(x), abs(y), 0.1)").unwrap();
        assert_eq!(e.eval(&[-0.5, 0.2]), 0.5);
        let e = Expr::parse("min(r, 2)").unwrap();
        assert_eq!(e.eval(&[3.0, 4.0]), 2.0);
        assert_eq!(Expr::parse("1.5e-1*pi").unwrap().as_constant(), Some(0.15 * std::f64::consts::PI));
    }

    #[test]
    fn rejects_non_whitelisted() {
        assert!(Expr::parse("exp(x)").is_err());
        assert!(Expr::parse("x +").is_err());
        assert!(Expr::parse("sqrt(x, y)").is_err());
        assert!(Expr::parse("x $ y").is_err());
        assert!(Expr::parse("").is_err());
    }

    #[test]
    fn serde_round_trip() {
        let e: Expr = serde_json::from_str("\"0.7*x\"").unwrap();
        assert_eq!(serde_json::to_string(&e).unwrap(), "\"0.7*x\"");
        let c: Expr = serde_json::from_str("2.5").unwrap();
        assert_eq!(c.as_constant(), Some(2.5));
        let back: Expr = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
        let neg = Expr::constant(-1.0);
        assert_eq!(Expr::parse(neg.source()).unwrap().eval(&[]), -1.0);
    }
}
