//! Arithmetic expressions in `t` and `x` for data functions in config files.
//!
//! Precedence, tightest first: `^` (right-associative), unary `-`, `* /`,
//! `+ -`. So `-x^2` is `-(x^2)` and `2^-1` is `0.5`.

use std::fmt;

use statrs::function::gamma::gamma;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    T,
    X,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Const {
    Pi,
    E,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Abs,
    Pow,
    Sqrt,
    Gamma,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "abs" => Func::Abs,
            "pow" => Func::Pow,
            "sqrt" => Func::Sqrt,
            "gammafn" => Func::Gamma,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Abs => "abs",
            Func::Pow => "pow",
            Func::Sqrt => "sqrt",
            Func::Gamma => "gammafn",
        }
    }

    fn arity(self) -> usize {
        if self == Func::Pow {
            2
        } else {
            1
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Const(Const),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

/// Syntax error at a byte offset of the source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub offset: usize,
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.message)
    }
}

impl std::error::Error for ParseError {}

/// 1-based line and byte column of `offset` in `src`.
pub fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let col = offset - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, col)
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
    End,
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    tok: Tok,
    tok_start: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> std::result::Result<Self, ParseError> {
        let mut p = Parser {
            src,
            pos: 0,
            tok: Tok::End,
            tok_start: 0,
        };
        p.advance()?;
        Ok(p)
    }

    fn error(&self, offset: usize, message: impl Into<String>) -> ParseError {
        let (line, col) = line_col(self.src, offset);
        ParseError {
            offset,
            line,
            col,
            message: message.into(),
        }
    }

    fn advance(&mut self) -> std::result::Result<(), ParseError> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        self.tok_start = self.pos;
        if self.pos >= bytes.len() {
            self.tok = Tok::End;
            return Ok(());
        }
        let c = bytes[self.pos];
        self.tok = match c {
            b'0'..=b'9' | b'.' => {
                let start = self.pos;
                while self.pos < bytes.len()
                    && (bytes[self.pos].is_ascii_digit() || bytes[self.pos] == b'.')
                {
                    self.pos += 1;
                }
                if self.pos < bytes.len() && (bytes[self.pos] == b'e' || bytes[self.pos] == b'E') {
                    let mut k = self.pos + 1;
                    if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                        k += 1;
                    }
                    if k < bytes.len() && bytes[k].is_ascii_digit() {
                        while k < bytes.len() && bytes[k].is_ascii_digit() {
                            k += 1;
                        }
                        self.pos = k;
                    }
                }
                let text = &self.src[start..self.pos];
                let v: f64 = text
                    .parse()
                    .map_err(|_| self.error(start, format!("malformed number '{text}'")))?;
                Tok::Num(v)
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                let start = self.pos;
                while self.pos < bytes.len()
                    && (bytes[self.pos].is_ascii_alphanumeric() || bytes[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                Tok::Ident(self.src[start..self.pos].to_string())
            }
            b'+' | b'-' | b'*' | b'/' | b'^' => {
                self.pos += 1;
                Tok::Op(c as char)
            }
            b'(' => {
                self.pos += 1;
                Tok::LParen
            }
            b')' => {
                self.pos += 1;
                Tok::RParen
            }
            b',' => {
                self.pos += 1;
                Tok::Comma
            }
            _ => {
                let ch = self.src[self.pos..].chars().next().unwrap_or('?');
                return Err(self.error(self.pos, format!("unexpected character '{ch}'")));
            }
        };
        Ok(())
    }

    fn describe(&self) -> String {
        match &self.tok {
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("'{s}'"),
            Tok::Op(c) => format!("'{c}'"),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::Comma => "','".into(),
            Tok::End => "end of input".into(),
        }
    }

    fn expect(&mut self, want: Tok, what: &str) -> std::result::Result<(), ParseError> {
        if self.tok != want {
            return Err(self.error(
                self.tok_start,
                format!("expected {what}, found {}", self.describe()),
            ));
        }
        self.advance()
    }

    fn sum(&mut self) -> std::result::Result<Expr, ParseError> {
        let mut lhs = self.product()?;
        loop {
            let op = match self.tok {
                Tok::Op('+') => BinOp::Add,
                Tok::Op('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.advance()?;
            let rhs = self.product()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn product(&mut self) -> std::result::Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.tok {
                Tok::Op('*') => BinOp::Mul,
                Tok::Op('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.advance()?;
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> std::result::Result<Expr, ParseError> {
        if self.tok == Tok::Op('-') {
            self.advance()?;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> std::result::Result<Expr, ParseError> {
        let base = self.primary()?;
        if self.tok == Tok::Op('^') {
            self.advance()?;
            let exp = self.unary()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> std::result::Result<Expr, ParseError> {
        let start = self.tok_start;
        match self.tok.clone() {
            Tok::Num(v) => {
                self.advance()?;
                Ok(Expr::Num(v))
            }
            Tok::LParen => {
                self.advance()?;
                let e = self.sum()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.advance()?;
                if let Some(func) = Func::from_name(&name) {
                    self.expect(Tok::LParen, &format!("'(' after {name}"))?;
                    let mut args = vec![self.sum()?];
                    while self.tok == Tok::Comma {
                        self.advance()?;
                        args.push(self.sum()?);
                    }
                    let close = self.tok_start;
                    self.expect(Tok::RParen, "')'")?;
                    if args.len() != func.arity() {
                        return Err(self.error(
                            close,
                            format!(
                                "{name} takes {} argument(s), got {}",
                                func.arity(),
                                args.len()
                            ),
                        ));
                    }
                    return Ok(Expr::Call(func, args));
                }
                match name.as_str() {
                    "t" => Ok(Expr::Var(Var::T)),
                    "x" => Ok(Expr::Var(Var::X)),
                    "pi" => Ok(Expr::Const(Const::Pi)),
                    "e" => Ok(Expr::Const(Const::E)),
                    _ => Err(self.error(start, format!("unknown identifier '{name}'"))),
                }
            }
            _ => Err(self.error(
                start,
                format!("expected a value, found {}", self.describe()),
            )),
        }
    }
}

pub fn parse_expr(src: &str) -> std::result::Result<Expr, ParseError> {
    let mut p = Parser::new(src)?;
    let e = p.sum()?;
    if p.tok != Tok::End {
        return Err(p.error(
            p.tok_start,
            format!("unexpected {} after expression", p.describe()),
        ));
    }
    Ok(e)
}

impl Expr {
    pub fn eval(&self, t: f64, x: f64) -> Result<f64> {
        Ok(match self {
            Expr::Num(v) => *v,
            Expr::Var(Var::T) => t,
            Expr::Var(Var::X) => x,
            Expr::Const(Const::Pi) => std::f64::consts::PI,
            Expr::Const(Const::E) => std::f64::consts::E,
            Expr::Neg(e) => -e.eval(t, x)?,
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.eval(t, x)?, b.eval(t, x)?);
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(Error::domain("division by zero"));
                        }
                        a / b
                    }
                    BinOp::Pow => power(a, b)?,
                }
            }
            Expr::Call(func, args) => {
                let a = args[0].eval(t, x)?;
                match func {
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Exp => a.exp(),
                    Func::Abs => a.abs(),
                    Func::Pow => power(a, args[1].eval(t, x)?)?,
                    Func::Sqrt => {
                        if a < 0.0 {
                            return Err(Error::domain(format!("sqrt of negative number {a}")));
                        }
                        a.sqrt()
                    }
                    Func::Gamma => {
                        if a <= 0.0 && a.fract() == 0.0 {
                            return Err(Error::domain(format!("gammafn has a pole at {a}")));
                        }
                        gamma(a)
                    }
                }
            }
        })
    }

    pub fn uses(&self, var: Var) -> bool {
        match self {
            Expr::Var(v) => *v == var,
            Expr::Num(_) | Expr::Const(_) => false,
            Expr::Neg(e) => e.uses(var),
            Expr::Bin(_, a, b) => a.uses(var) || b.uses(var),
            Expr::Call(_, args) => args.iter().any(|a| a.uses(var)),
        }
    }
}

fn power(a: f64, b: f64) -> Result<f64> {
    if a < 0.0 && b.fract() != 0.0 {
        return Err(Error::domain(format!(
            "{a} raised to non-integer power {b}"
        )));
    }
    if a == 0.0 && b < 0.0 {
        return Err(Error::domain(format!("zero raised to negative power {b}")));
    }
    Ok(a.powf(b))
}

/// Prints with every compound subexpression parenthesised, so parsing the
/// output gives back the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::Var(Var::T) => write!(f, "t"),
            Expr::Var(Var::X) => write!(f, "x"),
            Expr::Const(Const::Pi) => write!(f, "pi"),
            Expr::Const(Const::E) => write!(f, "e"),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Bin(op, a, b) => {
                let s = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::Pow => "^",
                };
                write!(f, "({a} {s} {b})")
            }
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(s: &str, t: f64, x: f64) -> f64 {
        parse_expr(s).unwrap().eval(t, x).unwrap()
    }

    #[test]
    fn evaluates() {
        assert!((ev("sin(pi*x)", 0.0, 0.5) - 1.0).abs() < 1e-15);
        let g = std::f64::consts::PI.sqrt() / 2.0;
        assert!((ev("t^0.5/ gammafn(1.5)", 1.0, 0.0) - 1.0 / g).abs() < 1e-12);
        assert_eq!(ev("2*-x", 0.0, 3.0), -6.0);
        assert_eq!(ev("2^3^2", 0.0, 0.0), 512.0);
        assert_eq!(ev("-x^2", 0.0, 3.0), -9.0);
        assert_eq!(ev("2^-1", 0.0, 0.0), 0.5);
        assert_eq!(ev("1 - 2 - 3", 0.0, 0.0), -4.0);
        assert_eq!(ev("8 / 4 / 2", 0.0, 0.0), 1.0);
        assert_eq!(ev("pow(2, 10) + abs(-1) + sqrt(4)", 0.0, 0.0), 1027.0);
        assert_eq!(ev("1.5e2 + 2E-1", 0.0, 0.0), 150.2);
        assert!((ev("e", 0.0, 0.0) - std::f64::consts::E).abs() < 1e-15);
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse_expr("sin(pi*y)").unwrap_err();
        assert_eq!((e.line, e.col), (1, 8));
        assert!(e.message.contains("unknown identifier"));
        let e = parse_expr("1 +\n  (2 * )").unwrap_err();
        assert_eq!((e.line, e.col), (2, 8));
        let e = parse_expr("pow(1)").unwrap_err();
        assert!(e.message.contains("2 argument"));
        assert!(parse_expr("1 2").is_err());
        assert!(parse_expr("3 # 4").is_err());
        assert!(parse_expr("").is_err());
    }

    #[test]
    fn domain_errors() {
        assert!(parse_expr("sqrt(x)").unwrap().eval(0.0, -1.0).is_err());
        assert!(parse_expr("1/x").unwrap().eval(0.0, 0.0).is_err());
        assert!(parse_expr("gammafn(-2)").unwrap().eval(0.0, 0.0).is_err());
        assert!(parse_expr("x^0.5").unwrap().eval(0.0, -1.0).is_err());
        assert_eq!(parse_expr("x^2").unwrap().eval(0.0, -2.0).unwrap(), 4.0);
    }

    #[test]
    fn prints_round_trip() {
        for s in [
            "-x^2",
            "2*-x",
            "t^0.5/gammafn(1.5)",
            "pow(x, 2) - -3e-7",
            "sin(pi*x)*exp(-t)",
            "1-(2-3)",
        ] {
            let e = parse_expr(s).unwrap();
            assert_eq!(parse_expr(&e.to_string()).unwrap(), e, "{s} -> {e}");
        }
    }
}
