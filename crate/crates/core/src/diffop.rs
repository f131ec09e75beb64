//! Truncated operators in the completed Weyl algebra, graded by homogeneous order.
//!
//! A component of order `t` collects the monomials `x^n d^(n+t)`, `n >= max(0, -t)`. Each stored
//! coefficient is exact; the window says which ones are known: orders below `floor` are unknown,
//! and an `Upto(c)` component only knows x-degrees `<= c`.
//!
//! Products are computed through the action on monomials: a component `A_t` maps `x^N` to
//! `alpha_t(N) x^(N-t)`, and `alpha_t` is the binomial transform of `s! * c_(s-t)`.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::{binom, factorial, falling, CycloScalar, Rational};
use crate::error::{pre, trunc, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum XCap {
    Exact,
    Upto(i64),
}

impl XCap {
    pub fn min(self, o: XCap) -> XCap {
        match (self, o) {
            (XCap::Exact, c) | (c, XCap::Exact) => c,
            (XCap::Upto(a), XCap::Upto(b)) => XCap::Upto(a.min(b)),
        }
    }

    pub fn minus(self, d: i64) -> XCap {
        match self {
            XCap::Exact => XCap::Exact,
            XCap::Upto(c) => XCap::Upto(c - d),
        }
    }

    pub fn covers(self, n: i64) -> bool {
        match self {
            XCap::Exact => true,
            XCap::Upto(c) => n <= c,
        }
    }

    pub fn as_option(self) -> Option<i64> {
        match self {
            XCap::Exact => None,
            XCap::Upto(c) => Some(c),
        }
    }
}

/// Smallest x-degree present in a component of order `t`.
pub fn n0(t: i64) -> i64 {
    (-t).max(0)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Component {
    pub cap: XCap,
    /// `coeffs[i]` multiplies `x^(n0+i) d^(n0+i+t)`.
    pub coeffs: Vec<CycloScalar>,
}

impl Component {
    fn normalize(mut self, t: i64, k: u32) -> Option<Component> {
        match self.cap {
            XCap::Exact => {
                while self.coeffs.last().is_some_and(|c| c.is_zero()) {
                    self.coeffs.pop();
                }
                if self.coeffs.is_empty() {
                    None
                } else {
                    Some(self)
                }
            }
            XCap::Upto(c) => {
                let len = (c - n0(t) + 1).max(0) as usize;
                self.coeffs.resize(len, CycloScalar::zero(k));
                Some(self)
            }
        }
    }

    pub fn coeff(&self, t: i64, n: i64) -> Option<CycloScalar> {
        if !self.cap.covers(n) {
            return None;
        }
        let i = n - n0(t);
        let k = self.coeffs.first().map(|c| c.k())?;
        if i < 0 {
            return Some(CycloScalar::zero(k));
        }
        Some(self.coeffs.get(i as usize).cloned().unwrap_or_else(|| CycloScalar::zero(k)))
    }

    /// Largest x-degree for which this component stores a coefficient slot.
    pub fn max_xdeg(&self, t: i64) -> i64 {
        n0(t) + self.coeffs.len() as i64 - 1
    }

    pub fn is_zero_known(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }
}

/// `alpha(N)` for `N = 0..=nmax` where the component maps `x^N` to `alpha(N) x^(N-t)`.
pub fn action_values(k: u32, t: i64, coeffs: &[CycloScalar], nmax: i64) -> Vec<CycloScalar> {
    let base = n0(t);
    let s0 = t.max(0);
    let mut d: Vec<(i64, CycloScalar)> = Vec::new();
    for (i, c) in coeffs.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let s = base + i as i64 + t;
        if s > nmax {
            break;
        }
        d.push((s, c.scale_int(&factorial(s as usize))));
    }
    let mut out = Vec::with_capacity((nmax + 1).max(0) as usize);
    for n in 0..=nmax {
        let mut acc = CycloScalar::zero(k);
        if n >= s0 {
            for (s, ds) in &d {
                if *s > n {
                    break;
                }
                acc = &acc + &ds.scale_int(&binom(n, *s));
            }
        }
        out.push(acc);
    }
    out
}

/// Inverse of `action_values`: coefficients `c_n` for `n = n0(t)..=xmax` from `alpha(0..)`.
pub fn coeffs_from_action(k: u32, t: i64, alpha: &[CycloScalar], xmax: i64) -> Vec<CycloScalar> {
    let base = n0(t);
    let s0 = t.max(0);
    let mut out = Vec::new();
    for n in base..=xmax {
        let s = n + t;
        let mut acc = CycloScalar::zero(k);
        for m in s0..=s {
            let v = &alpha[m as usize];
            if v.is_zero() {
                continue;
            }
            let mut b = binom(s, m);
            if (s - m) % 2 == 1 {
                b = -b;
            }
            acc = &acc + &v.scale_int(&b);
        }
        out.push(acc.scale(&Rational::new(BigInt::one(), factorial(s as usize))));
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GradedOp {
    k: u32,
    comps: BTreeMap<i64, Component>,
    /// Orders below the floor are unknown; `None` means every order is known.
    floor: Option<i64>,
}

/// Single monomial `coeff * x^xdeg d^ddeg`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct XdMonomial {
    pub xdeg: u32,
    pub ddeg: u32,
    pub coeff: CycloScalar,
}

impl XdMonomial {
    pub fn new(xdeg: u32, ddeg: u32, coeff: CycloScalar) -> Self {
        XdMonomial { xdeg, ddeg, coeff }
    }
}

/// `a * b` expanded by the Leibniz rule `d^b x^c = sum_j binom(b,j) (c)_j x^(c-j) d^(b-j)`.
pub fn mono_mul(a: &XdMonomial, b: &XdMonomial) -> GradedOp {
    let k = a.coeff.k();
    let c = &a.coeff * &b.coeff;
    let (bd, cx) = (a.ddeg as i64, b.xdeg as i64);
    let mut terms = Vec::new();
    for j in 0..=bd.min(cx) {
        let f = binom(bd, j) * falling(cx, j);
        terms.push(((a.xdeg as i64 + cx - j) as u32, (bd - j + b.ddeg as i64) as u32, c.scale_int(&f)));
    }
    GradedOp::from_monomials(k, &terms)
}

impl GradedOp {
    pub fn zero(k: u32) -> Self {
        GradedOp { k, comps: BTreeMap::new(), floor: None }
    }

    pub fn one(k: u32) -> Self {
        Self::scalar(CycloScalar::one(k))
    }

    pub fn scalar(c: CycloScalar) -> Self {
        Self::from_monomials(c.k(), &[(0, 0, c)])
    }

    pub fn x(k: u32) -> Self {
        Self::from_monomials(k, &[(1, 0, CycloScalar::one(k))])
    }

    pub fn d(k: u32) -> Self {
        Self::from_monomials(k, &[(0, 1, CycloScalar::one(k))])
    }

    pub fn d_pow(k: u32, q: u32) -> Self {
        Self::from_monomials(k, &[(0, q, CycloScalar::one(k))])
    }

    /// Exact operator from `(xdeg, ddeg, coeff)` triples.
    pub fn from_monomials(k: u32, terms: &[(u32, u32, CycloScalar)]) -> Self {
        let mut comps: BTreeMap<i64, Vec<CycloScalar>> = BTreeMap::new();
        for (xd, dd, c) in terms {
            assert_eq!(c.k(), k, "mismatched cyclotomic order");
            let t = *dd as i64 - *xd as i64;
            let i = (*xd as i64 - n0(t)) as usize;
            let v = comps.entry(t).or_default();
            if v.len() <= i {
                v.resize(i + 1, CycloScalar::zero(k));
            }
            v[i] = &v[i] + c;
        }
        let mut op = GradedOp::zero(k);
        for (t, coeffs) in comps {
            op.set_component(t, Component { cap: XCap::Exact, coeffs });
        }
        op
    }

    pub fn from_parts(k: u32, floor: Option<i64>, comps: BTreeMap<i64, Component>) -> Result<Self> {
        let mut op = GradedOp { k, comps: BTreeMap::new(), floor };
        for (t, c) in comps {
            if let Some(f) = floor {
                if t < f {
                    return pre(format!("component at order {} lies below floor {}", t, f));
                }
            }
            if c.coeffs.iter().any(|s| s.k() != k) {
                return Err(Error::ContextMismatch(k, c.coeffs.iter().find(|s| s.k() != k).unwrap().k()));
            }
            op.set_component(t, c);
        }
        Ok(op)
    }

    pub(crate) fn set_component(&mut self, t: i64, c: Component) {
        match c.normalize(t, self.k) {
            Some(c) => {
                self.comps.insert(t, c);
            }
            None => {
                self.comps.remove(&t);
            }
        }
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn floor(&self) -> Option<i64> {
        self.floor
    }

    pub fn components(&self) -> impl Iterator<Item = (i64, &Component)> + '_ {
        self.comps.iter().map(|(t, c)| (*t, c))
    }

    pub fn component(&self, t: i64) -> Option<&Component> {
        self.comps.get(&t)
    }

    /// Every coefficient of the represented operator is known.
    pub fn is_total(&self) -> bool {
        self.floor.is_none() && self.comps.values().all(|c| c.cap == XCap::Exact)
    }

    pub fn in_window(&self, t: i64) -> bool {
        self.floor.is_none_or(|f| t >= f)
    }

    /// Exactness cap at order `t`; `None` when the order lies below the floor.
    pub fn cap_at(&self, t: i64) -> Option<XCap> {
        if !self.in_window(t) {
            return None;
        }
        Some(self.comps.get(&t).map_or(XCap::Exact, |c| c.cap))
    }

    /// Coefficient of `x^n d^(n+t)`, or `None` if it lies outside the window.
    pub fn coeff(&self, t: i64, n: i64) -> Option<CycloScalar> {
        let zero = CycloScalar::zero(self.k);
        if n < n0(t) {
            return Some(zero);
        }
        if !self.in_window(t) {
            return None;
        }
        match self.comps.get(&t) {
            None => Some(zero),
            Some(c) if c.cap.covers(n) => Some(c.coeffs.get((n - n0(t)) as usize).cloned().unwrap_or(zero)),
            Some(_) => None,
        }
    }

    /// Coefficient of `x^xdeg d^ddeg`.
    pub fn coeff_xd(&self, xdeg: i64, ddeg: i64) -> Option<CycloScalar> {
        self.coeff(ddeg - xdeg, xdeg)
    }

    fn top_stored(&self) -> Option<i64> {
        self.comps.keys().next_back().copied()
    }

    fn top_bound(&self) -> Option<i64> {
        self.top_stored().or_else(|| self.floor.map(|f| f - 1))
    }

    /// True when the operator is known to vanish identically.
    pub fn is_exact_zero(&self) -> bool {
        self.floor.is_none() && self.comps.is_empty()
    }

    /// All known coefficients vanish.
    pub fn is_zero_in_window(&self) -> bool {
        self.comps.values().all(|c| c.is_zero_known())
    }

    // ---------------------------------------------------------------- ring ops

    fn check_k(&self, o: &GradedOp) -> Result<()> {
        if self.k != o.k {
            return Err(Error::ContextMismatch(self.k, o.k));
        }
        Ok(())
    }

    fn lincomb(&self, o: &GradedOp, sign: bool) -> Result<GradedOp> {
        self.check_k(o)?;
        let floor = match (self.floor, o.floor) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        };
        let mut out = GradedOp { k: self.k, comps: BTreeMap::new(), floor };
        let orders: std::collections::BTreeSet<i64> = self.comps.keys().chain(o.comps.keys()).copied().collect();
        for t in orders {
            if !out.in_window(t) {
                continue;
            }
            let (a, b) = (self.comps.get(&t), o.comps.get(&t));
            let cap = a.map_or(XCap::Exact, |c| c.cap).min(b.map_or(XCap::Exact, |c| c.cap));
            let len = a.map_or(0, |c| c.coeffs.len()).max(b.map_or(0, |c| c.coeffs.len()));
            let mut coeffs = Vec::with_capacity(len);
            for i in 0..len {
                let x = a.and_then(|c| c.coeffs.get(i));
                let y = b.and_then(|c| c.coeffs.get(i));
                let v = match (x, y) {
                    (Some(x), Some(y)) => {
                        if sign {
                            x + y
                        } else {
                            x - y
                        }
                    }
                    (Some(x), None) => x.clone(),
                    (None, Some(y)) => {
                        if sign {
                            y.clone()
                        } else {
                            -y
                        }
                    }
                    (None, None) => CycloScalar::zero(self.k),
                };
                coeffs.push(v);
            }
            out.set_component(t, Component { cap, coeffs });
        }
        Ok(out)
    }

    pub fn add(&self, o: &GradedOp) -> Result<GradedOp> {
        self.lincomb(o, true)
    }

    pub fn sub(&self, o: &GradedOp) -> Result<GradedOp> {
        self.lincomb(o, false)
    }

    pub fn neg(&self) -> GradedOp {
        self.scale(&CycloScalar::from_int(self.k, -1))
    }

    pub fn scale(&self, c: &CycloScalar) -> GradedOp {
        let mut out = GradedOp { k: self.k, comps: BTreeMap::new(), floor: self.floor };
        for (t, comp) in &self.comps {
            let coeffs = comp.coeffs.iter().map(|v| v * c).collect();
            out.set_component(*t, Component { cap: comp.cap, coeffs });
        }
        out
    }

    pub fn scale_rational(&self, r: &Rational) -> GradedOp {
        self.scale(&CycloScalar::from_rational(self.k, r.clone()))
    }

    /// Drop everything below order `f` (raising the floor).
    pub fn truncate_below(&self, f: i64) -> GradedOp {
        let floor = Some(self.floor.map_or(f, |g| g.max(f)));
        let comps = self.comps.iter().filter(|(t, _)| **t >= f).map(|(t, c)| (*t, c.clone())).collect();
        GradedOp { k: self.k, comps, floor }
    }

    /// Lower every component's cap to at most `x` (used to bound work on exact inputs).
    pub fn cap_xdeg(&self, x: i64) -> GradedOp {
        let mut out = GradedOp { k: self.k, comps: BTreeMap::new(), floor: self.floor };
        for (t, c) in &self.comps {
            out.set_component(*t, Component { cap: c.cap.min(XCap::Upto(x)), coeffs: c.coeffs.clone() });
        }
        out
    }

    pub fn mul(&self, o: &GradedOp) -> Result<GradedOp> {
        self.check_k(o)?;
        let k = self.k;
        if self.is_exact_zero() || o.is_exact_zero() {
            return Ok(GradedOp::zero(k));
        }
        let (top1, top2) = (self.top_bound().unwrap(), o.top_bound().unwrap());
        let mut floor: Option<i64> = None;
        if let Some(f1) = self.floor {
            floor = Some(f1 + top2);
        }
        if let Some(f2) = o.floor {
            floor = Some(floor.map_or(f2 + top1, |f| f.max(f2 + top1)));
        }
        if let (Some(f), Some(a), Some(b)) = (floor, self.top_stored(), o.top_stored()) {
            if f > a + b {
                return trunc(format!(
                    "window underflow in product: result floor {} above top order {} (input floors {:?}, {:?})",
                    f,
                    a + b,
                    self.floor,
                    o.floor
                ));
            }
        }
        // result orders and their pair lists
        let mut plan: BTreeMap<i64, Vec<(i64, i64)>> = BTreeMap::new();
        for &t1 in self.comps.keys() {
            for &t2 in o.comps.keys() {
                let t = t1 + t2;
                if floor.is_none_or(|f| t >= f) {
                    plan.entry(t).or_default().push((t1, t2));
                }
            }
        }
        // result caps / x-degree targets
        let mut targets: BTreeMap<i64, (XCap, i64)> = BTreeMap::new();
        let mut need1: BTreeMap<i64, i64> = BTreeMap::new();
        let mut need2: BTreeMap<i64, i64> = BTreeMap::new();
        for (&t, pairs) in &plan {
            let mut cap = XCap::Exact;
            let mut maxdeg = i64::MIN;
            for &(t1, t2) in pairs {
                let (c1, c2) = (&self.comps[&t1], &o.comps[&t2]);
                cap = cap.min(c1.cap).min(c2.cap.minus(t1));
                maxdeg = maxdeg.max(c1.max_xdeg(t1) + c2.max_xdeg(t2));
            }
            let xmax = match cap {
                XCap::Exact => maxdeg,
                XCap::Upto(c) => c,
            };
            targets.insert(t, (cap, xmax));
            if xmax < n0(t) {
                continue;
            }
            for &(t1, t2) in pairs {
                let e1 = need1.entry(t1).or_insert(i64::MIN);
                *e1 = (*e1).max(xmax + t - t2);
                let e2 = need2.entry(t2).or_insert(i64::MIN);
                *e2 = (*e2).max(xmax + t);
            }
        }
        let act1: BTreeMap<i64, Vec<CycloScalar>> =
            need1.iter().map(|(&t1, &m)| (t1, action_values(k, t1, &self.comps[&t1].coeffs, m))).collect();
        let act2: BTreeMap<i64, Vec<CycloScalar>> =
            need2.iter().map(|(&t2, &m)| (t2, action_values(k, t2, &o.comps[&t2].coeffs, m))).collect();
        let mut out = GradedOp { k, comps: BTreeMap::new(), floor };
        for (&t, pairs) in &plan {
            let (cap, xmax) = targets[&t];
            if xmax < n0(t) {
                if let XCap::Upto(_) = cap {
                    out.set_component(t, Component { cap, coeffs: vec![] });
                }
                continue;
            }
            let nmax = xmax + t;
            let mut gamma = vec![CycloScalar::zero(k); (nmax + 1) as usize];
            for &(t1, t2) in pairs {
                let (a1, a2) = (&act1[&t1], &act2[&t2]);
                for n in t.max(0).max(t2)..=nmax {
                    let b = &a2[n as usize];
                    if b.is_zero() {
                        continue;
                    }
                    let a = &a1[(n - t2) as usize];
                    if a.is_zero() {
                        continue;
                    }
                    gamma[n as usize] = &gamma[n as usize] + &(a * b);
                }
            }
            let coeffs = coeffs_from_action(k, t, &gamma, xmax);
            out.set_component(t, Component { cap, coeffs });
        }
        Ok(out)
    }

    pub fn commutator(&self, o: &GradedOp) -> Result<GradedOp> {
        self.mul(o)?.sub(&o.mul(self)?)
    }

    pub fn pow(&self, e: u32) -> Result<GradedOp> {
        let mut acc = GradedOp::one(self.k);
        for _ in 0..e {
            acc = acc.mul(self)?;
        }
        Ok(acc)
    }

    // ---------------------------------------------------------------- symbols

    /// Largest order carrying a known nonzero coefficient.
    pub fn ord(&self) -> Result<i64> {
        self.comps.iter().rev().find(|(_, c)| !c.is_zero_known()).map(|(t, _)| *t).ok_or(Error::UndefinedOrd)
    }

    pub fn sigma(&self) -> Result<GradedOp> {
        let p = self.ord()?;
        let mut out = GradedOp::zero(self.k);
        out.set_component(p, self.comps[&p].clone());
        Ok(out)
    }

    /// Highest power of `d` among known nonzero monomials.
    pub fn deg(&self) -> Result<i64> {
        let mut best: Option<i64> = None;
        for (t, c) in &self.comps {
            for (i, v) in c.coeffs.iter().enumerate() {
                if !v.is_zero() {
                    let m = n0(*t) + i as i64 + t;
                    best = Some(best.map_or(m, |b| b.max(m)));
                }
            }
        }
        best.ok_or(Error::UndefinedOrd)
    }

    pub fn is_monic(&self) -> bool {
        let Ok(p) = self.ord() else { return false };
        if p < 0 {
            return false;
        }
        let c = &self.comps[&p];
        c.coeffs[0].is_one() && c.coeffs[1..].iter().all(|v| v.is_zero())
    }

    /// Monic with vanishing coefficient function in front of `d^(p-1)`.
    pub fn is_normalized(&self) -> bool {
        if !self.is_monic() {
            return false;
        }
        let p = self.ord().unwrap();
        let dd = p - 1;
        if dd < 0 {
            return true;
        }
        for t in self.comps.keys() {
            let n = dd - t;
            if n < n0(*t) {
                continue;
            }
            if let Some(v) = self.coeff(*t, n) {
                if !v.is_zero() {
                    return false;
                }
            }
        }
        true
    }

    /// Compare two operators on the window where both are known.
    pub fn agrees_with(&self, o: &GradedOp) -> bool {
        if self.k != o.k {
            return false;
        }
        let orders: std::collections::BTreeSet<i64> = self.comps.keys().chain(o.comps.keys()).copied().collect();
        for t in orders {
            if !self.in_window(t) || !o.in_window(t) {
                continue;
            }
            let a = self.comps.get(&t);
            let b = o.comps.get(&t);
            let len = a.map_or(0, |c| c.coeffs.len()).max(b.map_or(0, |c| c.coeffs.len()));
            for i in 0..len as i64 {
                let n = n0(t) + i;
                if let (Some(x), Some(y)) = (self.coeff(t, n), o.coeff(t, n)) {
                    if x != y {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Number of known coefficients (for reporting how much was actually compared).
    pub fn known_count(&self) -> usize {
        self.comps.values().map(|c| c.coeffs.len()).sum()
    }

    /// Rewrite all scalars into the cyclotomic context `q` (requires `k | q` or rational scalars).
    pub fn embed(&self, q: u32) -> Result<GradedOp> {
        if q == self.k {
            return Ok(self.clone());
        }
        let mut out = GradedOp { k: q, comps: BTreeMap::new(), floor: self.floor };
        for (t, c) in &self.comps {
            let coeffs = c.coeffs.iter().map(|v| v.embed(q)).collect::<Result<Vec<_>>>()?;
            out.set_component(*t, Component { cap: c.cap, coeffs });
        }
        Ok(out)
    }

    /// Known monomials `(xdeg, ddeg, coeff)`, nonzero only.
    pub fn monomials(&self) -> Vec<(i64, i64, CycloScalar)> {
        let mut out = Vec::new();
        for (t, c) in self.comps.iter().rev() {
            for (i, v) in c.coeffs.iter().enumerate() {
                if !v.is_zero() {
                    let n = n0(*t) + i as i64;
                    out.push((n, n + t, v.clone()));
                }
            }
        }
        out
    }

    // ---------------------------------------------------------------- action

    pub fn apply_to_poly(&self, p: &TruncPoly) -> Result<TruncPoly> {
        self.check_k(&GradedOp::zero(p.k))?;
        let k = self.k;
        let support: Vec<i64> = match p.exact_to {
            None => (0..p.coeffs.len() as i64).filter(|&n| !p.coeffs[n as usize].is_zero()).collect(),
            Some(e) => (0..=e).collect(),
        };
        if support.is_empty() && p.exact_to.is_none() {
            return Ok(TruncPoly::exact(k, vec![]));
        }
        // highest output degree that is fully determined
        let mut exact_to: Option<i64> = None;
        if let (Some(e), Some(top)) = (p.exact_to, self.top_bound()) {
            exact_to = Some(e - top);
        }
        let nmax = support.iter().copied().max().unwrap_or(0);
        let nmin = support.iter().copied().min().unwrap_or(0);
        let emax_scan = match self.floor {
            Some(f) => nmin - f + 1,
            None => nmax - self.comps.keys().next().copied().unwrap_or(0),
        };
        'scan: for e in 0..=emax_scan.max(0) {
            for &n in &support {
                let t = n - e;
                let bad = match self.cap_at(t) {
                    None => true,
                    Some(cap) => !cap.covers(e),
                };
                if bad {
                    let lim = e - 1;
                    exact_to = Some(exact_to.map_or(lim, |x| x.min(lim)));
                    break 'scan;
                }
            }
        }
        let emax = match exact_to {
            Some(x) => x,
            None => support.iter().map(|&n| n - self.comps.keys().next().copied().unwrap_or(0)).max().unwrap_or(0),
        };
        if emax < 0 && exact_to.is_some() {
            return trunc(format!("operator window too shallow to act on degree {}", nmax));
        }
        let mut out = vec![CycloScalar::zero(k); (emax.max(-1) + 1) as usize];
        for &n in &support {
            let pn = &p.coeffs.get(n as usize).cloned().unwrap_or_else(|| CycloScalar::zero(k));
            if pn.is_zero() {
                continue;
            }
            for (t, c) in &self.comps {
                let e = n - t;
                if e < 0 || e > emax {
                    continue;
                }
                let alpha = action_values(k, *t, &c.coeffs, n);
                let a = &alpha[n as usize];
                if !a.is_zero() {
                    out[e as usize] = &out[e as usize] + &(a * pn);
                }
            }
        }
        Ok(match exact_to {
            None => TruncPoly::exact(k, out),
            Some(x) => TruncPoly { k, coeffs: out, exact_to: Some(x) },
        })
    }

    /// `(ad d^q)^a` applied to `self`.
    pub fn ad_pow(&self, q: u32, a: u32) -> Result<GradedOp> {
        let dq = GradedOp::d_pow(self.k, q);
        let mut acc = self.clone();
        for _ in 0..a {
            acc = dq.commutator(&acc)?;
        }
        Ok(acc)
    }

    // ---------------------------------------------------------------- io

    pub fn to_json_value(&self) -> serde_json::Value {
        let j = OpJson {
            k: self.k,
            floor: self.floor,
            components: self
                .comps
                .iter()
                .map(|(t, c)| {
                    (
                        t.to_string(),
                        CompJson { xcap: c.cap.as_option(), coeffs: c.coeffs.iter().map(|v| v.to_string()).collect() },
                    )
                })
                .collect(),
        };
        serde_json::to_value(j).expect("serializable")
    }

    pub fn from_json_value(v: &serde_json::Value) -> Result<GradedOp> {
        let j: OpJson = serde_json::from_value(v.clone())?;
        let mut comps = BTreeMap::new();
        for (t, c) in j.components {
            let t: i64 = t.parse().map_err(|_| Error::Precondition(format!("bad order key {:?}", t)))?;
            let coeffs = c.coeffs.iter().map(|s| crate::parse::parse_scalar(s, j.k)).collect::<Result<Vec<_>>>()?;
            let cap = c.xcap.map_or(XCap::Exact, XCap::Upto);
            comps.insert(t, Component { cap, coeffs });
        }
        GradedOp::from_parts(j.k, j.floor, comps)
    }
}

#[derive(Serialize, Deserialize)]
struct OpJson {
    k: u32,
    floor: Option<i64>,
    components: BTreeMap<String, CompJson>,
}

#[derive(Serialize, Deserialize)]
struct CompJson {
    xcap: Option<i64>,
    coeffs: Vec<String>,
}

pub(crate) fn fmt_coeff_prefix(c: &CycloScalar) -> (bool, String) {
    // returns (negative, text to put before the monomial, possibly empty)
    if let Some(r) = c.as_rational() {
        let neg = r < &Rational::zero();
        let a = if neg { -r.clone() } else { r.clone() };
        if a.is_one() {
            return (neg, String::new());
        }
        if a.is_integer() {
            return (neg, a.to_string());
        }
        return (neg, format!("({})", a));
    }
    (false, format!("({})", c))
}

pub(crate) fn join_signed(terms: Vec<(bool, String)>) -> String {
    if terms.is_empty() {
        return "0".to_string();
    }
    let mut out = String::new();
    for (i, (neg, body)) in terms.into_iter().enumerate() {
        if i == 0 {
            if neg {
                out.push('-');
            }
        } else {
            out.push_str(if neg { " - " } else { " + " });
        }
        out.push_str(&body);
    }
    out
}

fn fmt_monomial(xd: i64, dd: i64) -> String {
    let mut f = Vec::new();
    match xd {
        0 => {}
        1 => f.push("x".to_string()),
        n => f.push(format!("x^{}", n)),
    }
    match dd {
        0 => {}
        1 => f.push("d".to_string()),
        n => f.push(format!("d^{}", n)),
    }
    f.join("*")
}

impl fmt::Display for GradedOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut terms = Vec::new();
        let mut monos = self.monomials();
        monos.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        for (xd, dd, c) in monos {
            let (neg, pref) = fmt_coeff_prefix(&c);
            let mono = fmt_monomial(xd, dd);
            let body = match (pref.is_empty(), mono.is_empty()) {
                (true, true) => "1".to_string(),
                (true, false) => mono,
                (false, true) => pref.trim_start_matches('(').trim_end_matches(')').to_string(),
                (false, false) => format!("{}*{}", pref, mono),
            };
            terms.push((neg, body));
        }
        write!(f, "{}", join_signed(terms))?;
        if !self.is_total() {
            let caps: Vec<String> = self
                .comps
                .iter()
                .rev()
                .filter_map(|(t, c)| c.cap.as_option().map(|x| format!("{}:{}", t, x)))
                .collect();
            write!(f, " [window floor={}", self.floor.map_or("none".to_string(), |v| v.to_string()))?;
            if !caps.is_empty() {
                write!(f, " xcap={}", caps.join(","))?;
            }
            write!(f, "]")?;
        }
        Ok(())
    }
}

/// Polynomial in x, exact up to degree `exact_to` (or entirely, when `None`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TruncPoly {
    pub k: u32,
    pub coeffs: Vec<CycloScalar>,
    pub exact_to: Option<i64>,
}

impl TruncPoly {
    pub fn exact(k: u32, mut coeffs: Vec<CycloScalar>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        TruncPoly { k, coeffs, exact_to: None }
    }

    pub fn monomial(k: u32, n: usize, c: CycloScalar) -> Self {
        let mut v = vec![CycloScalar::zero(k); n + 1];
        v[n] = c;
        Self::exact(k, v)
    }

    pub fn coeff(&self, n: usize) -> CycloScalar {
        self.coeffs.get(n).cloned().unwrap_or_else(|| CycloScalar::zero(self.k))
    }

    /// Equality on the degrees where both are known.
    pub fn agrees_with(&self, o: &TruncPoly) -> bool {
        let lim = match (self.exact_to, o.exact_to) {
            (None, None) => self.coeffs.len().max(o.coeffs.len()) as i64 - 1,
            (Some(a), None) | (None, Some(a)) => a,
            (Some(a), Some(b)) => a.min(b),
        };
        (0..=lim).all(|n| self.coeff(n as usize) == o.coeff(n as usize))
    }
}
