//! Operator expression grammar.
//!
//! ```text
//! expr   := ['-'] term (('+'|'-') term)*
//! term   := factor ('*' factor)*
//! factor := atom ['^' nat]
//! atom   := rational | 'xi' | 'x' | 'd' | gform | '(' expr ')'
//! gform  := 'G' '{' 'r=' int (';' ('f[' nat ',' nat ']=' expr | 'g[' nat ']=' expr))* '}'
//! ```
//!
//! `*` is noncommutative and evaluated in written order.

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::arith::{CycloScalar, Rational};
use crate::diffop::GradedOp;
use crate::error::{Error, Result};
use crate::gform::{Hcp, HcpSeries};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OpExpr {
    Rat(Rational),
    Xi,
    X,
    D,
    G(GLit),
    Neg(Box<OpExpr>),
    Add(Box<OpExpr>, Box<OpExpr>),
    Sub(Box<OpExpr>, Box<OpExpr>),
    Mul(Box<OpExpr>, Box<OpExpr>),
    Pow(Box<OpExpr>, u32),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GLit {
    pub r: i64,
    pub f: Vec<(u32, u32, OpExpr)>,
    pub g: Vec<(u32, OpExpr)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Int(BigInt),
    Ident(String),
    Sym(char),
    End,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(src: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
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
        let (l0, c0) = (line, col);
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            col += i - start;
            out.push(Token { tok: Tok::Int(s.parse().unwrap()), line: l0, col: c0 });
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_alphabetic() {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            col += i - start;
            out.push(Token { tok: Tok::Ident(s), line: l0, col: c0 });
        } else if "+-*/^(){}[],;=".contains(c) {
            i += 1;
            col += 1;
            out.push(Token { tok: Tok::Sym(c), line: l0, col: c0 });
        } else {
            return Err(Error::Parse { line, col, msg: format!("unexpected character {:?}", c) });
        }
    }
    out.push(Token { tok: Tok::End, line, col });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    k: Option<u32>,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        let t = self.peek();
        Err(Error::Parse { line: t.line, col: t.col, msg: msg.into() })
    }

    fn describe(t: &Tok) -> String {
        match t {
            Tok::Int(n) => format!("number {}", n),
            Tok::Ident(s) => format!("identifier {:?}", s),
            Tok::Sym(c) => format!("{:?}", c),
            Tok::End => "end of input".into(),
        }
    }

    fn is_sym(&self, c: char) -> bool {
        self.peek().tok == Tok::Sym(c)
    }

    fn expect_sym(&mut self, c: char) -> Result<()> {
        if self.is_sym(c) {
            self.pos += 1;
            Ok(())
        } else {
            let d = Self::describe(&self.peek().tok);
            self.err(format!("expected {:?}, found {}", c, d))
        }
    }

    fn expect_ident(&mut self, s: &str) -> Result<()> {
        if self.peek().tok == Tok::Ident(s.into()) {
            self.pos += 1;
            Ok(())
        } else {
            let d = Self::describe(&self.peek().tok);
            self.err(format!("expected {:?}, found {}", s, d))
        }
    }

    fn nat(&mut self) -> Result<u32> {
        match &self.peek().tok {
            Tok::Int(n) => match n.to_u32() {
                Some(v) => {
                    self.pos += 1;
                    Ok(v)
                }
                None => self.err("integer too large"),
            },
            t => {
                let d = Self::describe(t);
                self.err(format!("expected a nonnegative integer, found {}", d))
            }
        }
    }

    fn expr(&mut self) -> Result<OpExpr> {
        let mut lhs = if self.is_sym('-') {
            self.pos += 1;
            OpExpr::Neg(Box::new(self.term()?))
        } else {
            self.term()?
        };
        loop {
            if self.is_sym('+') {
                self.pos += 1;
                lhs = OpExpr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.is_sym('-') {
                self.pos += 1;
                lhs = OpExpr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<OpExpr> {
        let mut lhs = self.factor()?;
        while self.is_sym('*') {
            self.pos += 1;
            lhs = OpExpr::Mul(Box::new(lhs), Box::new(self.factor()?));
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<OpExpr> {
        let base = self.atom()?;
        if self.is_sym('^') {
            self.pos += 1;
            let e = self.nat()?;
            return Ok(OpExpr::Pow(Box::new(base), e));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<OpExpr> {
        let t = self.peek().clone();
        match &t.tok {
            Tok::Int(n) => {
                self.pos += 1;
                if self.is_sym('/') {
                    self.pos += 1;
                    let d = match &self.peek().tok {
                        Tok::Int(d) => d.clone(),
                        other => {
                            let dsc = Self::describe(other);
                            return self.err(format!("expected denominator, found {}", dsc));
                        }
                    };
                    if d.is_zero() {
                        return self.err("zero denominator");
                    }
                    self.pos += 1;
                    return Ok(OpExpr::Rat(Rational::new(n.clone(), d)));
                }
                Ok(OpExpr::Rat(Rational::from_integer(n.clone())))
            }
            Tok::Ident(s) => match s.as_str() {
                "x" => {
                    self.pos += 1;
                    Ok(OpExpr::X)
                }
                "d" => {
                    self.pos += 1;
                    Ok(OpExpr::D)
                }
                "xi" => {
                    if self.k.is_none() {
                        return self.err("xi used but the cyclotomic order k is not set (pass --k)");
                    }
                    self.pos += 1;
                    Ok(OpExpr::Xi)
                }
                "G" => self.gform(),
                other => {
                    let o = other.to_string();
                    self.err(format!("unknown identifier {:?}", o))
                }
            },
            Tok::Sym('(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect_sym(')')?;
                Ok(e)
            }
            other => {
                let d = Self::describe(other);
                self.err(format!("expected an operand, found {}", d))
            }
        }
    }

    fn gform(&mut self) -> Result<OpExpr> {
        self.expect_ident("G")?;
        self.expect_sym('{')?;
        self.expect_ident("r")?;
        self.expect_sym('=')?;
        let neg = if self.is_sym('-') {
            self.pos += 1;
            true
        } else {
            false
        };
        let r = self.nat()? as i64;
        let r = if neg { -r } else { r };
        let mut lit = GLit { r, f: vec![], g: vec![] };
        while self.is_sym(';') {
            self.pos += 1;
            match &self.peek().tok {
                Tok::Ident(s) if s == "f" => {
                    self.pos += 1;
                    self.expect_sym('[')?;
                    let l = self.nat()?;
                    self.expect_sym(',')?;
                    let i = self.nat()?;
                    self.expect_sym(']')?;
                    self.expect_sym('=')?;
                    let v = self.expr()?;
                    lit.f.push((l, i, v));
                }
                Tok::Ident(s) if s == "g" => {
                    self.pos += 1;
                    self.expect_sym('[')?;
                    let j = self.nat()?;
                    if j == 0 {
                        return self.err("B_j needs j >= 1");
                    }
                    self.expect_sym(']')?;
                    self.expect_sym('=')?;
                    let v = self.expr()?;
                    lit.g.push((j, v));
                }
                other => {
                    let d = Self::describe(other);
                    return self.err(format!("expected f[l,i]= or g[j]=, found {}", d));
                }
            }
        }
        self.expect_sym('}')?;
        Ok(OpExpr::G(lit))
    }
}

pub fn parse(src: &str, k: Option<u32>) -> Result<OpExpr> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0, k };
    let e = p.expr()?;
    if p.peek().tok != Tok::End {
        let d = Parser::describe(&p.peek().tok);
        return p.err(format!("unexpected {} after expression", d));
    }
    Ok(e)
}

// ---------------------------------------------------------------- printing

fn prec(e: &OpExpr) -> u8 {
    match e {
        OpExpr::Add(..) | OpExpr::Sub(..) => 1,
        OpExpr::Mul(..) => 2,
        OpExpr::Pow(..) => 3,
        _ => 4,
    }
}

fn wrap(e: &OpExpr, min: u8) -> String {
    let s = print(e);
    if prec(e) < min {
        format!("({})", s)
    } else {
        s
    }
}

pub fn print(e: &OpExpr) -> String {
    match e {
        OpExpr::Rat(r) => {
            if r.is_negative() {
                format!("(-{})", -r.clone())
            } else {
                r.to_string()
            }
        }
        OpExpr::Xi => "xi".into(),
        OpExpr::X => "x".into(),
        OpExpr::D => "d".into(),
        OpExpr::G(g) => {
            let mut parts = vec![format!("r={}", g.r)];
            for (l, i, v) in &g.f {
                parts.push(format!("f[{},{}]={}", l, i, print(v)));
            }
            for (j, v) in &g.g {
                parts.push(format!("g[{}]={}", j, print(v)));
            }
            format!("G{{{}}}", parts.join("; "))
        }
        OpExpr::Neg(a) => format!("(-{})", wrap(a, 2)),
        OpExpr::Add(a, b) => format!("{} + {}", print(a), wrap(b, 2)),
        OpExpr::Sub(a, b) => format!("{} - {}", print(a), wrap(b, 2)),
        OpExpr::Mul(a, b) => format!("{}*{}", wrap(a, 2), wrap(b, 3)),
        OpExpr::Pow(a, n) => format!("{}^{}", wrap(a, 4), n),
    }
}

// ---------------------------------------------------------------- evaluation

pub fn eval_scalar(e: &OpExpr, k: u32) -> Result<CycloScalar> {
    Ok(match e {
        OpExpr::Rat(r) => CycloScalar::from_rational(k, r.clone()),
        OpExpr::Xi => CycloScalar::xi_pow(k, 1),
        OpExpr::Neg(a) => -eval_scalar(a, k)?,
        OpExpr::Add(a, b) => eval_scalar(a, k)? + eval_scalar(b, k)?,
        OpExpr::Sub(a, b) => eval_scalar(a, k)? - eval_scalar(b, k)?,
        OpExpr::Mul(a, b) => eval_scalar(a, k)? * eval_scalar(b, k)?,
        OpExpr::Pow(a, n) => eval_scalar(a, k)?.pow(*n),
        OpExpr::X | OpExpr::D | OpExpr::G(_) => {
            return Err(Error::Precondition(format!("{} is not a scalar", print(e))))
        }
    })
}

pub fn parse_scalar(s: &str, k: u32) -> Result<CycloScalar> {
    eval_scalar(&parse(s, Some(k))?, k)
}

fn glit_to_hcp(g: &GLit, k: u32) -> Result<Hcp> {
    let mut h = Hcp::zero(k, g.r)?;
    for (l, i, v) in &g.f {
        h = h.with_gamma(*l, *i, eval_scalar(v, k)?);
    }
    for (j, v) in &g.g {
        h = h.with_b(*j, eval_scalar(v, k)?);
    }
    Ok(h)
}

/// Evaluate to a graded operator; G-form literals are expanded up to x-degree `xcap`.
pub fn eval_graded(e: &OpExpr, k: u32, xcap: i64) -> Result<GradedOp> {
    Ok(match e {
        OpExpr::Rat(_) | OpExpr::Xi => GradedOp::scalar(eval_scalar(e, k)?),
        OpExpr::X => GradedOp::x(k),
        OpExpr::D => GradedOp::d(k),
        OpExpr::G(g) => glit_to_hcp(g, k)?.expand(xcap),
        OpExpr::Neg(a) => eval_graded(a, k, xcap)?.neg(),
        OpExpr::Add(a, b) => eval_graded(a, k, xcap)?.add(&eval_graded(b, k, xcap)?)?,
        OpExpr::Sub(a, b) => eval_graded(a, k, xcap)?.sub(&eval_graded(b, k, xcap)?)?,
        OpExpr::Mul(a, b) => eval_graded(a, k, xcap)?.mul(&eval_graded(b, k, xcap)?)?,
        OpExpr::Pow(a, n) => eval_graded(a, k, xcap)?.pow(*n)?,
    })
}

/// Evaluate to a series of HCPs. `x` has order -1 and is rejected.
pub fn eval_series(e: &OpExpr, k: u32) -> Result<HcpSeries> {
    Ok(match e {
        OpExpr::Rat(_) | OpExpr::Xi => HcpSeries::one(k).scale(&eval_scalar(e, k)?),
        OpExpr::X => {
            return Err(Error::Precondition("x has order -1; HCPs with negative order are not representable".into()))
        }
        OpExpr::D => HcpSeries::d_pow(k, 1)?,
        OpExpr::G(g) => HcpSeries::from_hcp(glit_to_hcp(g, k)?),
        OpExpr::Neg(a) => eval_series(a, k)?.scale(&CycloScalar::from_int(k, -1)),
        OpExpr::Add(a, b) => eval_series(a, k)?.add(&eval_series(b, k)?)?,
        OpExpr::Sub(a, b) => eval_series(a, k)?.sub(&eval_series(b, k)?)?,
        OpExpr::Mul(a, b) => eval_series(a, k)?.mul(&eval_series(b, k)?)?,
        OpExpr::Pow(a, n) => eval_series(a, k)?.pow(*n)?,
    })
}

/// Whether the expression contains a G-form literal.
pub fn has_gform(e: &OpExpr) -> bool {
    match e {
        OpExpr::G(_) => true,
        OpExpr::Neg(a) | OpExpr::Pow(a, _) => has_gform(a),
        OpExpr::Add(a, b) | OpExpr::Sub(a, b) | OpExpr::Mul(a, b) => has_gform(a) || has_gform(b),
        _ => false,
    }
}
