//! Exact scalars: rationals and the cyclotomic field Q(xi), xi a primitive k-th root of unity.
//!
//! Elements of Q(xi) are stored as residues modulo the cyclotomic polynomial Phi_k, so every
//! nonzero element is invertible.

use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::rc::Rc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn big(n: impl Into<BigInt>) -> Rational {
    Rational::from_integer(n.into())
}

/// `a/b`, or just `a` when the denominator is one.
pub fn fmt_rational(r: &Rational) -> String {
    r.to_string()
}

pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((a, b)) => (a.trim(), b.trim()),
        None => (s, "1"),
    };
    let n: BigInt = num.parse().ok()?;
    let d: BigInt = den.parse().ok()?;
    if d.is_zero() {
        return None;
    }
    Some(Rational::new(n, d))
}

// ---------------------------------------------------------------------------
// cyclotomic polynomials

fn poly_divexact(num: &[i64], den: &[i64]) -> Vec<i64> {
    // both monic-ish integer polys, ascending coefficients; den has leading coeff 1
    let mut rem = num.to_vec();
    let dd = den.len() - 1;
    let mut quot = vec![0i64; num.len() - dd];
    for e in (dd..num.len()).rev() {
        let c = rem[e];
        if c == 0 {
            continue;
        }
        quot[e - dd] = c;
        for (j, &dj) in den.iter().enumerate() {
            rem[e - dd + j] -= c * dj;
        }
    }
    debug_assert!(rem.iter().all(|&c| c == 0));
    quot
}

fn compute_phi(k: u32) -> Vec<i64> {
    // x^k - 1 divided by Phi_d for proper divisors d
    let mut p = vec![0i64; k as usize + 1];
    p[0] = -1;
    p[k as usize] = 1;
    for d in 1..k {
        if k.is_multiple_of(d) {
            p = poly_divexact(&p, &phi(d));
        }
    }
    p
}

thread_local! {
    static PHI_CACHE: RefCell<HashMap<u32, Rc<Vec<i64>>>> = RefCell::new(HashMap::new());
}

/// Integer coefficients (ascending) of the k-th cyclotomic polynomial.
pub fn phi(k: u32) -> Rc<Vec<i64>> {
    assert!(k >= 1, "cyclotomic order must be positive");
    if let Some(p) = PHI_CACHE.with(|c| c.borrow().get(&k).cloned()) {
        return p;
    }
    let p = Rc::new(compute_phi(k));
    PHI_CACHE.with(|c| c.borrow_mut().insert(k, p.clone()));
    p
}

pub fn phi_degree(k: u32) -> usize {
    phi(k).len() - 1
}

fn reduce(k: u32, mut c: Vec<Rational>) -> Vec<Rational> {
    let ph = phi(k);
    let d = ph.len() - 1;
    if c.len() > d {
        for e in (d..c.len()).rev() {
            if c[e].is_zero() {
                continue;
            }
            let lead = std::mem::replace(&mut c[e], Rational::zero());
            for (j, &pj) in ph.iter().enumerate().take(d) {
                if pj != 0 {
                    c[e - d + j] -= &lead * BigInt::from(pj);
                }
            }
        }
        c.truncate(d);
    }
    c.resize(d, Rational::zero());
    c
}

// ---------------------------------------------------------------------------

/// Element of Q(xi) with xi a primitive k-th root of unity.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct CycloScalar {
    k: u32,
    coeffs: Vec<Rational>,
}

impl fmt::Debug for CycloScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[k={}] {}", self.k, self)
    }
}

impl CycloScalar {
    pub fn zero(k: u32) -> Self {
        CycloScalar { k, coeffs: vec![Rational::zero(); phi_degree(k)] }
    }

    pub fn one(k: u32) -> Self {
        Self::from_rational(k, Rational::one())
    }

    pub fn from_rational(k: u32, r: Rational) -> Self {
        let mut c = vec![Rational::zero(); phi_degree(k)];
        c[0] = r;
        CycloScalar { k, coeffs: c }
    }

    pub fn from_int(k: u32, n: i64) -> Self {
        Self::from_rational(k, int(n))
    }

    /// Builds from an arbitrary polynomial in xi (ascending coefficients), reducing mod Phi_k.
    pub fn from_poly(k: u32, c: Vec<Rational>) -> Self {
        CycloScalar { k, coeffs: reduce(k, c) }
    }

    pub fn xi_pow(k: u32, e: i64) -> Self {
        let e = e.rem_euclid(k as i64) as usize;
        let mut c = vec![Rational::zero(); e + 1];
        c[e] = Rational::one();
        Self::from_poly(k, c)
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn is_one(&self) -> bool {
        self.coeffs[0].is_one() && self.coeffs[1..].iter().all(|c| c.is_zero())
    }

    /// The value as a rational, if it has no xi part.
    pub fn as_rational(&self) -> Option<&Rational> {
        if self.coeffs[1..].iter().all(|c| c.is_zero()) {
            Some(&self.coeffs[0])
        } else {
            None
        }
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.k != other.k {
            return Err(Error::ContextMismatch(self.k, other.k));
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Ok(self.add_unchecked(other))
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Ok(self.add_unchecked(&-other))
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Ok(self.mul_unchecked(other))
    }

    fn add_unchecked(&self, other: &Self) -> Self {
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        CycloScalar { k: self.k, coeffs }
    }

    fn mul_unchecked(&self, other: &Self) -> Self {
        let d = self.coeffs.len();
        if d == 1 {
            return CycloScalar { k: self.k, coeffs: vec![&self.coeffs[0] * &other.coeffs[0]] };
        }
        let mut prod = vec![Rational::zero(); 2 * d - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if !b.is_zero() {
                    prod[i + j] += a * b;
                }
            }
        }
        Self::from_poly(self.k, prod)
    }

    pub fn scale(&self, r: &Rational) -> Self {
        CycloScalar { k: self.k, coeffs: self.coeffs.iter().map(|c| c * r).collect() }
    }

    pub fn scale_int(&self, n: &BigInt) -> Self {
        CycloScalar { k: self.k, coeffs: self.coeffs.iter().map(|c| c * n).collect() }
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::one(self.k);
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// Multiplicative inverse via the extended Euclidean algorithm against Phi_k.
    pub fn inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        if self.coeffs.len() == 1 {
            return Ok(CycloScalar { k: self.k, coeffs: vec![self.coeffs[0].recip()] });
        }
        let ph: Vec<Rational> = phi(self.k).iter().map(|&c| int(c)).collect();
        let (g, s) = ext_gcd_first(trim(self.coeffs.clone()), ph);
        // g is a nonzero constant since Phi_k is irreducible
        debug_assert_eq!(g.len(), 1);
        let ginv = g[0].recip();
        Ok(Self::from_poly(self.k, s.into_iter().map(|c| c * &ginv).collect()))
    }

    pub fn checked_div(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Ok(self.mul_unchecked(&other.inv()?))
    }

    /// Image under Q(xi_k) -> Q(xi_q), xi_k -> xi_q^(q/k). Requires k | q.
    pub fn embed(&self, q: u32) -> Result<Self> {
        if q == self.k {
            return Ok(self.clone());
        }
        if !q.is_multiple_of(self.k) {
            if let Some(r) = self.as_rational() {
                return Ok(Self::from_rational(q, r.clone()));
            }
            return Err(Error::ContextMismatch(self.k, q));
        }
        let step = (q / self.k) as usize;
        let mut c = vec![Rational::zero(); step * self.coeffs.len()];
        for (e, v) in self.coeffs.iter().enumerate() {
            c[e * step] = v.clone();
        }
        Ok(Self::from_poly(q, c))
    }
}

fn trim(mut p: Vec<Rational>) -> Vec<Rational> {
    while p.len() > 1 && p.last().is_some_and(|c| c.is_zero()) {
        p.pop();
    }
    p
}

fn poly_sub_mul(a: &[Rational], b: &[Rational], q: &[Rational]) -> Vec<Rational> {
    // a - b*q
    let mut out = a.to_vec();
    let need = b.len() + q.len() - 1;
    if out.len() < need {
        out.resize(need, Rational::zero());
    }
    for (i, bi) in b.iter().enumerate() {
        for (j, qj) in q.iter().enumerate() {
            out[i + j] -= bi * qj;
        }
    }
    trim(out)
}

fn poly_divrem(a: &[Rational], b: &[Rational]) -> (Vec<Rational>, Vec<Rational>) {
    let mut rem = a.to_vec();
    let db = b.len() - 1;
    if rem.len() < b.len() {
        return (vec![Rational::zero()], trim(rem));
    }
    let lead = b[db].recip();
    let mut quot = vec![Rational::zero(); rem.len() - db];
    for e in (db..rem.len()).rev() {
        let c = &rem[e] * &lead;
        if c.is_zero() {
            continue;
        }
        for (j, bj) in b.iter().enumerate() {
            rem[e - db + j] -= &c * bj;
        }
        quot[e - db] = c;
    }
    rem.truncate(db.max(1));
    (trim(quot), trim(rem))
}

/// Returns (g, s) with s*a = g (mod b), g = gcd(a, b).
fn ext_gcd_first(a: Vec<Rational>, b: Vec<Rational>) -> (Vec<Rational>, Vec<Rational>) {
    let (mut r0, mut r1) = (a, b);
    let (mut s0, mut s1) = (vec![Rational::one()], vec![Rational::zero()]);
    while !(r1.len() == 1 && r1[0].is_zero()) {
        let (q, r) = poly_divrem(&r0, &r1);
        let s = poly_sub_mul(&s0, &s1, &q);
        r0 = std::mem::replace(&mut r1, r);
        s0 = std::mem::replace(&mut s1, s);
    }
    (r0, s0)
}

impl fmt::Display for CycloScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = Vec::new();
        for (e, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let s = if e == 0 {
                fmt_rational(c)
            } else {
                let xi = if e == 1 { "xi".to_string() } else { format!("xi^{}", e) };
                if c.is_one() {
                    xi
                } else if (-c).is_one() {
                    format!("-{}", xi)
                } else {
                    format!("{}*{}", fmt_rational(c), xi)
                }
            };
            parts.push(s);
        }
        if parts.is_empty() {
            return write!(f, "0");
        }
        let mut out = parts[0].clone();
        for p in &parts[1..] {
            match p.strip_prefix('-') {
                Some(rest) => {
                    out.push_str(" - ");
                    out.push_str(rest);
                }
                None => {
                    out.push_str(" + ");
                    out.push_str(p);
                }
            }
        }
        write!(f, "{}", out)
    }
}

impl<'a> Add<&'a CycloScalar> for &'a CycloScalar {
    type Output = CycloScalar;
    fn add(self, o: &CycloScalar) -> CycloScalar {
        assert_eq!(self.k, o.k, "mismatched cyclotomic order");
        self.add_unchecked(o)
    }
}

impl<'a> Sub<&'a CycloScalar> for &'a CycloScalar {
    type Output = CycloScalar;
    fn sub(self, o: &CycloScalar) -> CycloScalar {
        assert_eq!(self.k, o.k, "mismatched cyclotomic order");
        self.add_unchecked(&-o)
    }
}

impl<'a> Mul<&'a CycloScalar> for &'a CycloScalar {
    type Output = CycloScalar;
    fn mul(self, o: &CycloScalar) -> CycloScalar {
        assert_eq!(self.k, o.k, "mismatched cyclotomic order");
        self.mul_unchecked(o)
    }
}

impl Neg for &CycloScalar {
    type Output = CycloScalar;
    fn neg(self) -> CycloScalar {
        CycloScalar { k: self.k, coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }
}

impl Neg for CycloScalar {
    type Output = CycloScalar;
    fn neg(self) -> CycloScalar {
        -&self
    }
}

macro_rules! owned_binop {
    ($tr:ident, $m:ident) => {
        impl $tr<CycloScalar> for CycloScalar {
            type Output = CycloScalar;
            fn $m(self, o: CycloScalar) -> CycloScalar {
                (&self).$m(&o)
            }
        }
        impl<'a> $tr<&'a CycloScalar> for CycloScalar {
            type Output = CycloScalar;
            fn $m(self, o: &CycloScalar) -> CycloScalar {
                (&self).$m(o)
            }
        }
    };
}
owned_binop!(Add, add);
owned_binop!(Sub, sub);
owned_binop!(Mul, mul);

pub fn field_ops(a: &CycloScalar, b: &CycloScalar, op: FieldOp) -> Result<CycloScalar> {
    match op {
        FieldOp::Add => a.checked_add(b),
        FieldOp::Sub => a.checked_sub(b),
        FieldOp::Mul => a.checked_mul(b),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldOp {
    Add,
    Sub,
    Mul,
}

// ---------------------------------------------------------------------------
// integer combinatorics shared by the operator modules

thread_local! {
    static BINOM: RefCell<Vec<Vec<BigInt>>> = RefCell::new(vec![vec![BigInt::one()]]);
    static FACT: RefCell<Vec<BigInt>> = RefCell::new(vec![BigInt::one()]);
}

pub fn binom(n: i64, k: i64) -> BigInt {
    if n < 0 || k < 0 || k > n {
        return BigInt::zero();
    }
    let (n, k) = (n as usize, k as usize);
    BINOM.with(|b| {
        let mut rows = b.borrow_mut();
        while rows.len() <= n {
            let prev = rows.last().unwrap();
            let mut row = Vec::with_capacity(prev.len() + 1);
            row.push(BigInt::one());
            for w in prev.windows(2) {
                row.push(&w[0] + &w[1]);
            }
            row.push(BigInt::one());
            rows.push(row);
        }
        rows[n][k].clone()
    })
}

pub fn factorial(n: usize) -> BigInt {
    FACT.with(|f| {
        let mut f = f.borrow_mut();
        while f.len() <= n {
            let next = f.last().unwrap() * BigInt::from(f.len());
            f.push(next);
        }
        f[n].clone()
    })
}

/// Falling factorial (n)_j = n(n-1)...(n-j+1); zero when 0 <= n < j.
pub fn falling(n: i64, j: i64) -> BigInt {
    let mut acc = BigInt::one();
    for i in 0..j {
        acc *= BigInt::from(n - i);
    }
    acc
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    r.numer().to_f64().unwrap_or(f64::NAN) / r.denom().to_f64().unwrap_or(f64::NAN)
}

pub fn rational_floor(r: &Rational) -> BigInt {
    r.numer().div_floor(r.denom())
}

pub fn rational_abs_max(xs: &[Rational]) -> Rational {
    xs.iter().map(|x| x.abs()).max().unwrap_or_else(Rational::zero)
}
