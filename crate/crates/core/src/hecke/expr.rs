//! A small arithmetic-expression language for transcribed closed forms: numbers, the
//! variables `l1 l2 q t r`, `+ - * / ^` (non-negative integer exponents), parentheses and
//! unary minus. Implicit multiplication is not supported; write `q*r`.

use num_bigint::BigInt;
use num_rational::BigRational;

use super::scalar::Scalar;
use crate::error::{BtqError, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(BigInt),
    Var(Var),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Var {
    L1,
    L2,
    Q,
    T,
    R,
}

/// Values for the variables. `t` and `r` are expected to be q²+q+1 and q+1.
#[derive(Clone, Debug)]
pub struct Bindings<S> {
    pub l1: S,
    pub l2: S,
    pub q: S,
    pub t: S,
    pub r: S,
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(BigInt),
    Ident(String),
    Op(char),
}

fn tokenize(s: &str) -> Result<Vec<Tok>> {
    let mut out = Vec::new();
    let chars: Vec<char> = s.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let lit: String = chars[start..i].iter().collect();
            out.push(Tok::Num(lit.parse().expect("digits")));
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Tok::Ident(chars[start..i].iter().collect()));
        } else if "+-*/^()".contains(c) {
            out.push(Tok::Op(c));
            i += 1;
        } else {
            return Err(BtqError::Parse(format!("unexpected character '{c}' in expression")));
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn eat_op(&mut self, op: char) -> bool {
        if self.peek() == Some(&Tok::Op(op)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn err<T>(&self, what: &str) -> Result<T> {
        Err(BtqError::Parse(format!("{what} at token {}", self.pos)))
    }

    // sum := product (('+'|'-') product)*
    fn sum(&mut self) -> Result<Expr> {
        let mut lhs = self.product()?;
        loop {
            if self.eat_op('+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.product()?));
            } else if self.eat_op('-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.product()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    // product := unary (('*'|'/') unary)*
    fn product(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat_op('*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat_op('/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    // unary := '-' unary | power
    fn unary(&mut self) -> Result<Expr> {
        if self.eat_op('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    // power := atom ('^' integer)?
    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.eat_op('^') {
            match self.toks.get(self.pos).cloned() {
                Some(Tok::Num(n)) => {
                    self.pos += 1;
                    let e = u32::try_from(n).or_else(|_| self.err("exponent too large"))?;
                    Ok(Expr::Pow(Box::new(base), e))
                }
                _ => self.err("expected a non-negative integer exponent"),
            }
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.toks.get(self.pos).cloned() {
            Some(Tok::Num(n)) => {
                self.pos += 1;
                Ok(Expr::Num(n))
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                let v = match name.as_str() {
                    "l1" => Var::L1,
                    "l2" => Var::L2,
                    "q" => Var::Q,
                    "t" => Var::T,
                    "r" => Var::R,
                    _ => return Err(BtqError::Parse(format!("unknown variable \"{name}\""))),
                };
                Ok(Expr::Var(v))
            }
            Some(Tok::Op('(')) => {
                self.pos += 1;
                let e = self.sum()?;
                if !self.eat_op(')') {
                    return self.err("expected ')'");
                }
                Ok(e)
            }
            _ => self.err("expected a number, variable or '('"),
        }
    }
}

impl Expr {
    pub fn parse(s: &str) -> Result<Expr> {
        let mut p = Parser { toks: tokenize(s)?, pos: 0 };
        let e = p.sum()?;
        if p.pos != p.toks.len() {
            return p.err("trailing input");
        }
        Ok(e)
    }

    /// Evaluates with the given bindings. Division by zero is the caller's concern: exact
    /// backends panic, the complex backend yields non-finite values.
    pub fn eval<S: Scalar>(&self, b: &Bindings<S>) -> S {
        match self {
            Expr::Num(n) => S::from_rational(&BigRational::from_integer(n.clone())),
            Expr::Var(v) => match v {
                Var::L1 => b.l1.clone(),
                Var::L2 => b.l2.clone(),
                Var::Q => b.q.clone(),
                Var::T => b.t.clone(),
                Var::R => b.r.clone(),
            },
            Expr::Neg(x) => -x.eval(b),
            Expr::Add(x, y) => x.eval(b) + y.eval(b),
            Expr::Sub(x, y) => x.eval(b) - y.eval(b),
            Expr::Mul(x, y) => x.eval(b) * y.eval(b),
            Expr::Div(x, y) => x.eval(b) / y.eval(b),
            Expr::Pow(x, e) => x.eval(b).pow(*e),
        }
    }
}
