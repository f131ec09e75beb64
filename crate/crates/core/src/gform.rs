//! Homogeneous operators in G-form: `H = (sum f_{l,i} Gamma_l A_i + sum g_j B_j) D^r`.
//!
//! Writing `H = M D^r`, the order-zero part `M` is diagonal on monomials: `M x^m = mu(m) x^m`
//! with `mu(m) = sum f_{l,i} m^l xi^(i m) + g_(m+1)`. Products, expansion and fitting all go
//! through `mu`.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::{binom, int, CycloScalar, Rational};
use crate::diffop::{action_values, coeffs_from_action, Component, GradedOp, XCap};
use crate::error::{pre, trunc, Error, Result};

/// Quasi-polynomial `m -> sum c_{l,i} m^l xi^(i m)`.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct QuasiPoly {
    pub terms: BTreeMap<(u32, u32), CycloScalar>,
}

impl QuasiPoly {
    fn add_term(&mut self, k: u32, l: u32, i: u32, c: CycloScalar) {
        let key = (l, i % k);
        let v = match self.terms.remove(&key) {
            Some(old) => &old + &c,
            None => c,
        };
        if !v.is_zero() {
            self.terms.insert(key, v);
        }
    }

    pub fn eval(&self, k: u32, m: i64) -> CycloScalar {
        let mut acc = CycloScalar::zero(k);
        for ((l, i), c) in &self.terms {
            let mp = int(m).pow(*l as i32);
            let x = CycloScalar::xi_pow(k, *i as i64 * m);
            acc = &acc + &(c * &x).scale(&mp);
        }
        acc
    }

    pub fn mul(&self, o: &QuasiPoly, k: u32) -> QuasiPoly {
        let mut out = QuasiPoly::default();
        for ((l1, i1), a) in &self.terms {
            for ((l2, i2), b) in &o.terms {
                out.add_term(k, l1 + l2, i1 + i2, a * b);
            }
        }
        out
    }

    /// `m -> self(m + s)`.
    pub fn shift(&self, k: u32, s: i64) -> QuasiPoly {
        let mut out = QuasiPoly::default();
        for ((l, i), c) in &self.terms {
            let c = c * &CycloScalar::xi_pow(k, *i as i64 * s);
            for j in 0..=*l {
                let f = binom(*l as i64, j as i64) * BigInt::from(s).pow(l - j);
                if f.is_zero() {
                    continue;
                }
                out.add_term(k, j, *i, c.scale_int(&f));
            }
        }
        out
    }
}

/// Eigenvalue function of the order-zero factor of an HCP.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EigenFunction {
    pub k: u32,
    pub qp: QuasiPoly,
    pub correction: BTreeMap<u64, CycloScalar>,
}

impl EigenFunction {
    pub fn eval(&self, m: u64) -> CycloScalar {
        let mut v = self.qp.eval(self.k, m as i64);
        if let Some(c) = self.correction.get(&m) {
            v = &v + c;
        }
        v
    }
}

pub fn eigen_eval(e: &EigenFunction, n: u64) -> CycloScalar {
    e.eval(n)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Hcp {
    k: u32,
    r: i64,
    gamma: BTreeMap<(u32, u32), CycloScalar>,
    bpart: BTreeMap<u32, CycloScalar>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FitBounds {
    pub dmax: u32,
    pub nbmax: u32,
    pub margin: u32,
}

impl FitBounds {
    pub fn new(dmax: u32, nbmax: u32) -> Self {
        FitBounds { dmax, nbmax, margin: 8 }
    }

    /// Smallest x-degree cap that allows the fit.
    pub fn required_xcap(&self, k: u32) -> i64 {
        (self.nbmax + k * (self.dmax + 1) + self.margin) as i64 - 1
    }

    pub fn escalated(&self, k: u32) -> Self {
        FitBounds { dmax: 2 * self.dmax + 2, nbmax: self.nbmax + 2 * k, margin: self.margin }
    }
}

impl Hcp {
    pub fn zero(k: u32, r: i64) -> Result<Self> {
        if r < 0 {
            return pre(format!("HCP order r = {} < 0 is not representable", r));
        }
        Ok(Hcp { k, r, gamma: BTreeMap::new(), bpart: BTreeMap::new() })
    }

    /// `D^r`.
    pub fn d_pow(k: u32, r: i64) -> Result<Self> {
        Ok(Self::zero(k, r)?.with_gamma(0, 0, CycloScalar::one(k)))
    }

    /// `c * Gamma_l A_i D^r`.
    pub fn monomial(k: u32, l: u32, i: u32, r: i64, c: CycloScalar) -> Result<Self> {
        Ok(Self::zero(k, r)?.with_gamma(l, i, c))
    }

    pub fn with_gamma(mut self, l: u32, i: u32, c: CycloScalar) -> Self {
        assert_eq!(c.k(), self.k, "mismatched cyclotomic order");
        let key = (l, i % self.k);
        let v = match self.gamma.remove(&key) {
            Some(old) => &old + &c,
            None => c,
        };
        if !v.is_zero() {
            self.gamma.insert(key, v);
        }
        self
    }

    pub fn with_b(mut self, j: u32, c: CycloScalar) -> Self {
        assert!(j >= 1, "B_j needs j >= 1");
        assert_eq!(c.k(), self.k, "mismatched cyclotomic order");
        let v = match self.bpart.remove(&j) {
            Some(old) => &old + &c,
            None => c,
        };
        if !v.is_zero() {
            self.bpart.insert(j, v);
        }
        self
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn r(&self) -> i64 {
        self.r
    }

    pub fn gamma(&self) -> &BTreeMap<(u32, u32), CycloScalar> {
        &self.gamma
    }

    pub fn bpart(&self) -> &BTreeMap<u32, CycloScalar> {
        &self.bpart
    }

    pub fn is_zero(&self) -> bool {
        self.gamma.is_empty() && self.bpart.is_empty()
    }

    pub fn is_b_free(&self) -> bool {
        self.bpart.is_empty()
    }

    /// Some `f_{l,i}` with `i > 0` is nonzero.
    pub fn contains_a(&self) -> bool {
        self.gamma.keys().any(|(_, i)| *i > 0)
    }

    pub fn sdeg_a(&self) -> Option<u32> {
        self.gamma.keys().map(|(l, _)| *l).max()
    }

    pub fn sdeg_b(&self) -> Option<u32> {
        self.bpart.keys().copied().max()
    }

    pub fn sdeg(&self) -> (Option<u32>, Option<u32>) {
        (self.sdeg_a(), self.sdeg_b())
    }

    pub fn eigen(&self) -> EigenFunction {
        EigenFunction {
            k: self.k,
            qp: QuasiPoly { terms: self.gamma.clone() },
            correction: self.bpart.iter().map(|(j, c)| ((*j - 1) as u64, c.clone())).collect(),
        }
    }

    fn from_eigen(k: u32, r: i64, e: EigenFunction) -> Hcp {
        let mut h = Hcp { k, r, gamma: e.qp.terms, bpart: BTreeMap::new() };
        h.gamma.retain(|_, c| !c.is_zero());
        for (m, c) in e.correction {
            if !c.is_zero() {
                h.bpart.insert(m as u32 + 1, c);
            }
        }
        h
    }

    /// Only `Gamma_l A_0` terms: then the expansion is a finite differential operator.
    pub fn is_finite(&self) -> bool {
        self.bpart.is_empty() && self.gamma.keys().all(|(_, i)| *i == 0)
    }

    pub fn add(&self, o: &Hcp) -> Result<Hcp> {
        if self.k != o.k {
            return Err(Error::ContextMismatch(self.k, o.k));
        }
        if self.r != o.r {
            return pre(format!("adding HCPs of different orders {} and {}", self.r, o.r));
        }
        let mut h = self.clone();
        for ((l, i), c) in &o.gamma {
            h = h.with_gamma(*l, *i, c.clone());
        }
        for (j, c) in &o.bpart {
            h = h.with_b(*j, c.clone());
        }
        Ok(h)
    }

    pub fn scale(&self, c: &CycloScalar) -> Hcp {
        let mut h = Hcp { k: self.k, r: self.r, gamma: BTreeMap::new(), bpart: BTreeMap::new() };
        for ((l, i), v) in &self.gamma {
            h = h.with_gamma(*l, *i, v * c);
        }
        for (j, v) in &self.bpart {
            h = h.with_b(*j, v * c);
        }
        h
    }

    pub fn embed(&self, q: u32) -> Result<Hcp> {
        if q == self.k {
            return Ok(self.clone());
        }
        if !q.is_multiple_of(self.k) && self.contains_a() {
            return Err(Error::ContextMismatch(self.k, q));
        }
        let step = q / self.k.max(1);
        let mut h = Hcp::zero(q, self.r)?;
        for ((l, i), c) in &self.gamma {
            let i = if q.is_multiple_of(self.k) { i * step } else { *i };
            h = h.with_gamma(*l, i, c.embed(q)?);
        }
        for (j, c) in &self.bpart {
            h = h.with_b(*j, c.embed(q)?);
        }
        Ok(h)
    }

    /// Series coefficients of the single homogeneous component, up to x-degree `xcap`
    /// (exact when the operator is a finite differential operator).
    pub fn expand(&self, xcap: i64) -> GradedOp {
        let k = self.k;
        let (cap, xmax) = if self.is_finite() {
            (XCap::Exact, self.sdeg_a().map_or(-1, |l| l as i64))
        } else {
            (XCap::Upto(xcap), xcap)
        };
        let e = self.eigen();
        let mu: Vec<CycloScalar> = (0..=xmax.max(0)).map(|m| e.eval(m as u64)).collect();
        let coeffs = if xmax < 0 { vec![] } else { coeffs_from_action(k, 0, &mu, xmax) };
        let mut comps = BTreeMap::new();
        comps.insert(self.r, Component { cap, coeffs });
        GradedOp::from_parts(k, None, comps).expect("valid component")
    }

    pub fn mul(&self, o: &Hcp) -> Result<Hcp> {
        if self.k != o.k {
            return Err(Error::ContextMismatch(self.k, o.k));
        }
        let k = self.k;
        let (e1, e2) = (self.eigen(), o.eigen());
        let shift = self.r;
        let qp2 = e2.qp.shift(k, shift);
        let mut c2: BTreeMap<u64, CycloScalar> = BTreeMap::new();
        for (m, c) in &e2.correction {
            let m = *m as i64 - shift;
            if m >= 0 {
                c2.insert(m as u64, c.clone());
            }
        }
        let qp3 = e1.qp.mul(&qp2, k);
        let mut corr = BTreeMap::new();
        let support: std::collections::BTreeSet<u64> = e1.correction.keys().chain(c2.keys()).copied().collect();
        for m in support {
            let a = e1.qp.eval(k, m as i64);
            let b = qp2.eval(k, m as i64);
            let ca = e1.correction.get(&m).cloned().unwrap_or_else(|| CycloScalar::zero(k));
            let cb = c2.get(&m).cloned().unwrap_or_else(|| CycloScalar::zero(k));
            let v = &(&(&a * &cb) + &(&ca * &b)) + &(&ca * &cb);
            corr.insert(m, v);
        }
        Ok(Hcp::from_eigen(k, self.r + o.r, EigenFunction { k, qp: qp3, correction: corr }))
    }

    pub fn to_gform_text(&self) -> String {
        let mut parts = vec![format!("r={}", self.r)];
        for ((l, i), c) in &self.gamma {
            parts.push(format!("f[{},{}]={}", l, i, c));
        }
        for (j, c) in &self.bpart {
            parts.push(format!("g[{}]={}", j, c));
        }
        format!("G{{{}}}", parts.join("; "))
    }
}

impl fmt::Display for Hcp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_gform_text())
    }
}

pub fn expand_hcp(h: &Hcp, xcap: i64) -> GradedOp {
    h.expand(xcap)
}

pub fn hcp_mul(a: &Hcp, b: &Hcp) -> Result<Hcp> {
    a.mul(b)
}

pub fn sdeg(h: &Hcp) -> (Option<u32>, Option<u32>) {
    h.sdeg()
}

/// Interpolating polynomial through `(x_j, y_j)`, monomial coefficients ascending.
fn interpolate(k: u32, xs: &[i64], ys: &[CycloScalar]) -> Vec<CycloScalar> {
    let n = xs.len();
    // Newton divided differences
    let mut dd: Vec<CycloScalar> = ys.to_vec();
    for level in 1..n {
        for j in (level..n).rev() {
            let den = Rational::new(BigInt::one(), BigInt::from(xs[j] - xs[j - level]));
            dd[j] = (&dd[j] - &dd[j - 1]).scale(&den);
        }
    }
    // expand sum dd[j] prod_{m<j} (x - xs[m]) by Horner
    let mut poly: Vec<CycloScalar> = vec![CycloScalar::zero(k); n.max(1)];
    for j in (0..n).rev() {
        // poly = poly * (x - xs[j]) + dd[j]
        let mut next = vec![CycloScalar::zero(k); n.max(1)];
        for (e, c) in poly.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if e + 1 < next.len() {
                next[e + 1] = &next[e + 1] + c;
            }
            next[e] = &next[e] - &c.scale(&int(xs[j]));
        }
        next[0] = &next[0] + &dd[j];
        poly = next;
    }
    poly
}

/// Recover the G-form of the order-`r` component of `c` from its eigenvalues.
pub fn fit_hcp(c: &GradedOp, r: i64, b: FitBounds) -> Result<Hcp> {
    let k = c.k();
    if r < 0 {
        return pre(format!("component of order {} < 0: HCPs with negative r are not representable", r));
    }
    let Some(cap) = c.cap_at(r) else {
        return trunc(format!("order {} lies below the window floor {:?}", r, c.floor()));
    };
    let comp = c.component(r);
    let need = b.required_xcap(k);
    let xmax = match cap {
        XCap::Upto(x) => {
            if x < need {
                return trunc(format!(
                    "order {} is exact only to x-degree {}; fitting with dmax={}, nbmax={}, margin={} needs {}",
                    r, x, b.dmax, b.nbmax, b.margin, need
                ));
            }
            x
        }
        XCap::Exact => {
            let deg = comp.map_or(0, |cp| cp.max_xdeg(r).max(0) as u32);
            need.max(FitBounds { dmax: deg, ..b }.required_xcap(k))
        }
    };
    let coeffs: Vec<CycloScalar> = comp.map(|cp| cp.coeffs.clone()).unwrap_or_default();
    let mu = action_values(k, 0, &coeffs, xmax);
    let nb = b.nbmax as i64;
    let per = b.dmax as i64 + 1;
    let mut per_residue: Vec<Vec<CycloScalar>> = Vec::new();
    for rho in 0..k as i64 {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        let mut m = nb;
        while xs.len() < per as usize {
            if m.rem_euclid(k as i64) == rho {
                xs.push(m);
                ys.push(mu[m as usize].clone());
            }
            m += 1;
        }
        per_residue.push(interpolate(k, &xs, &ys));
    }
    let kinv = Rational::new(BigInt::one(), BigInt::from(k));
    let mut h = Hcp::zero(k, r)?;
    for l in 0..per as usize {
        for i in 0..k as i64 {
            let mut acc = CycloScalar::zero(k);
            for rho in 0..k as i64 {
                let v = &per_residue[rho as usize][l];
                if !v.is_zero() {
                    acc = &acc + &(v * &CycloScalar::xi_pow(k, -i * rho));
                }
            }
            h = h.with_gamma(l as u32, i as u32, acc.scale(&kinv));
        }
    }
    let qp = QuasiPoly { terms: h.gamma.clone() };
    for m in nb..=xmax {
        if qp.eval(k, m) != mu[m as usize] {
            return Err(Error::NotHcp(format!(
                "order {}: eigenvalue at m={} disagrees with the degree-{} quasi-polynomial fit (nbmax={})",
                r, m, b.dmax, b.nbmax
            )));
        }
    }
    for m in 0..nb {
        let g = &mu[m as usize] - &qp.eval(k, m);
        h = h.with_b(m as u32 + 1, g);
    }
    Ok(h)
}

// ---------------------------------------------------------------------------

/// Operator whose homogeneous components are HCPs, known down to `floor`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HcpSeries {
    k: u32,
    comps: BTreeMap<i64, Hcp>,
    floor: Option<i64>,
}

impl HcpSeries {
    pub fn zero(k: u32) -> Self {
        HcpSeries { k, comps: BTreeMap::new(), floor: None }
    }

    pub fn one(k: u32) -> Self {
        Self::from_hcp(Hcp::d_pow(k, 0).unwrap())
    }

    pub fn d_pow(k: u32, q: i64) -> Result<Self> {
        Ok(Self::from_hcp(Hcp::d_pow(k, q)?))
    }

    pub fn from_hcp(h: Hcp) -> Self {
        let mut s = HcpSeries::zero(h.k);
        s.insert(h);
        s
    }

    pub fn from_parts(k: u32, floor: Option<i64>, comps: Vec<Hcp>) -> Result<Self> {
        let mut s = HcpSeries { k, comps: BTreeMap::new(), floor };
        for h in comps {
            if h.k != k {
                return Err(Error::ContextMismatch(k, h.k));
            }
            if floor.is_some_and(|f| h.r < f) {
                return pre(format!("component of order {} lies below floor {:?}", h.r, floor));
            }
            let h = match s.comps.remove(&h.r) {
                Some(old) => old.add(&h)?,
                None => h,
            };
            s.insert(h);
        }
        Ok(s)
    }

    fn insert(&mut self, h: Hcp) {
        if h.is_zero() {
            self.comps.remove(&h.r);
        } else {
            self.comps.insert(h.r, h);
        }
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn floor(&self) -> Option<i64> {
        self.floor
    }

    pub fn with_floor(mut self, f: Option<i64>) -> Self {
        if let Some(f) = f {
            self.comps.retain(|t, _| *t >= f);
            self.floor = Some(self.floor.map_or(f, |g| g.max(f)));
        }
        self
    }

    pub fn components(&self) -> impl DoubleEndedIterator<Item = (&i64, &Hcp)> + '_ {
        self.comps.iter()
    }

    pub fn component(&self, t: i64) -> Option<&Hcp> {
        self.comps.get(&t)
    }

    pub fn top(&self) -> Option<i64> {
        self.comps.keys().next_back().copied()
    }

    pub fn is_zero(&self) -> bool {
        self.comps.is_empty()
    }

    pub fn is_exact(&self) -> bool {
        self.floor.is_none()
    }

    pub fn is_monic(&self) -> bool {
        match self.top().and_then(|p| self.comps.get(&p)) {
            Some(h) => h.bpart.is_empty() && h.gamma.len() == 1 && h.gamma.get(&(0, 0)).is_some_and(|c| c.is_one()),
            None => false,
        }
    }

    pub fn is_b_free(&self) -> bool {
        self.comps.values().all(|h| h.is_b_free())
    }

    /// Every `(l, i, r, coeff)` Gamma-term.
    pub fn gamma_terms(&self) -> Vec<(u32, u32, i64, CycloScalar)> {
        let mut out = Vec::new();
        for (r, h) in self.comps.iter().rev() {
            for ((l, i), c) in &h.gamma {
                out.push((*l, *i, *r, c.clone()));
            }
        }
        out
    }

    /// Orders `>= floor` present in the window (orders below the lowest stored one included).
    pub fn in_window(&self, t: i64) -> bool {
        self.floor.is_none_or(|f| t >= f)
    }

    fn combine(&self, o: &HcpSeries, sign: bool) -> Result<HcpSeries> {
        if self.k != o.k {
            return Err(Error::ContextMismatch(self.k, o.k));
        }
        let floor = match (self.floor, o.floor) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        };
        let mut out = HcpSeries { k: self.k, comps: BTreeMap::new(), floor };
        let minus = CycloScalar::from_int(self.k, -1);
        let orders: std::collections::BTreeSet<i64> = self.comps.keys().chain(o.comps.keys()).copied().collect();
        for t in orders {
            if !out.in_window(t) {
                continue;
            }
            let a = self.comps.get(&t).cloned().unwrap_or(Hcp::zero(self.k, t)?);
            let b = o.comps.get(&t).cloned().unwrap_or(Hcp::zero(self.k, t)?);
            let b = if sign { b } else { b.scale(&minus) };
            out.insert(a.add(&b)?);
        }
        Ok(out)
    }

    pub fn add(&self, o: &HcpSeries) -> Result<HcpSeries> {
        self.combine(o, true)
    }

    pub fn sub(&self, o: &HcpSeries) -> Result<HcpSeries> {
        self.combine(o, false)
    }

    pub fn scale(&self, c: &CycloScalar) -> HcpSeries {
        let mut out = HcpSeries { k: self.k, comps: BTreeMap::new(), floor: self.floor };
        for h in self.comps.values() {
            out.insert(h.scale(c));
        }
        out
    }

    pub fn scale_rational(&self, r: &Rational) -> HcpSeries {
        self.scale(&CycloScalar::from_rational(self.k, r.clone()))
    }

    fn top_bound(&self) -> Option<i64> {
        self.top().or_else(|| self.floor.map(|f| f - 1))
    }

    pub fn mul(&self, o: &HcpSeries) -> Result<HcpSeries> {
        if self.k != o.k {
            return Err(Error::ContextMismatch(self.k, o.k));
        }
        if (self.is_zero() && self.floor.is_none()) || (o.is_zero() && o.floor.is_none()) {
            return Ok(HcpSeries::zero(self.k));
        }
        let (t1, t2) = (self.top_bound().unwrap(), o.top_bound().unwrap());
        let mut floor = self.floor.map(|f| f + t2);
        if let Some(f2) = o.floor {
            floor = Some(floor.map_or(f2 + t1, |f| f.max(f2 + t1)));
        }
        if let (Some(f), Some(a), Some(b)) = (floor, self.top(), o.top()) {
            if f > a + b {
                return trunc(format!("window underflow in HCP product: floor {} above top {}", f, a + b));
            }
        }
        let mut out = HcpSeries { k: self.k, comps: BTreeMap::new(), floor };
        for (r1, h1) in &self.comps {
            for (r2, h2) in &o.comps {
                let r = r1 + r2;
                if !out.in_window(r) {
                    continue;
                }
                let p = h1.mul(h2)?;
                let p = match out.comps.remove(&r) {
                    Some(old) => old.add(&p)?,
                    None => p,
                };
                out.insert(p);
            }
        }
        Ok(out)
    }

    pub fn commutator(&self, o: &HcpSeries) -> Result<HcpSeries> {
        self.mul(o)?.sub(&o.mul(self)?)
    }

    pub fn pow(&self, e: u32) -> Result<HcpSeries> {
        let mut acc = HcpSeries::one(self.k);
        for _ in 0..e {
            acc = acc.mul(self)?;
        }
        Ok(acc)
    }

    pub fn to_graded(&self, xcap: i64) -> GradedOp {
        let mut acc = GradedOp::zero(self.k);
        for h in self.comps.values() {
            acc = acc.add(&h.expand(xcap)).expect("same context");
        }
        match self.floor {
            Some(f) => acc.truncate_below(f),
            None => acc,
        }
    }

    pub fn embed(&self, q: u32) -> Result<HcpSeries> {
        let comps = self.comps.values().map(|h| h.embed(q)).collect::<Result<Vec<_>>>()?;
        HcpSeries::from_parts(q, self.floor, comps)
    }

    pub fn to_gform_text(&self) -> String {
        if self.comps.is_empty() {
            return "0".to_string();
        }
        self.comps.values().rev().map(|h| h.to_gform_text()).collect::<Vec<_>>().join(" + ")
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let j = SeriesJson {
            k: self.k,
            floor: self.floor,
            components: self
                .comps
                .values()
                .rev()
                .map(|h| HcpJson {
                    r: h.r,
                    gamma: h.gamma.iter().map(|((l, i), c)| (*l, *i, c.to_string())).collect(),
                    b: h.bpart.iter().map(|(j, c)| (*j, c.to_string())).collect(),
                })
                .collect(),
        };
        serde_json::to_value(j).expect("serializable")
    }

    pub fn from_json_value(v: &serde_json::Value) -> Result<HcpSeries> {
        let j: SeriesJson = serde_json::from_value(v.clone())?;
        let mut comps = Vec::new();
        for c in j.components {
            let mut h = Hcp::zero(j.k, c.r)?;
            for (l, i, s) in c.gamma {
                h = h.with_gamma(l, i, crate::parse::parse_scalar(&s, j.k)?);
            }
            for (jj, s) in c.b {
                if jj == 0 {
                    return pre("B_j requires j >= 1");
                }
                h = h.with_b(jj, crate::parse::parse_scalar(&s, j.k)?);
            }
            comps.push(h);
        }
        HcpSeries::from_parts(j.k, j.floor, comps)
    }
}

impl fmt::Display for HcpSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_gform_text())?;
        if let Some(fl) = self.floor {
            write!(f, " [floor={}]", fl)?;
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct SeriesJson {
    k: u32,
    floor: Option<i64>,
    components: Vec<HcpJson>,
}

#[derive(Serialize, Deserialize)]
struct HcpJson {
    r: i64,
    gamma: Vec<(u32, u32, String)>,
    b: Vec<(u32, String)>,
}

/// Outcome of checking condition A_q(kk).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AqkCheck {
    pub holds: bool,
    pub witness: Option<AqkWitness>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AqkWitness {
    pub clause: u8,
    pub order: i64,
    pub detail: String,
}

pub fn check_aqk(p: &HcpSeries, kk: u32) -> AqkCheck {
    let fail = |clause: u8, order: i64, detail: String| AqkCheck {
        holds: false,
        witness: Some(AqkWitness { clause, order, detail }),
    };
    let Some(top) = p.top() else {
        return fail(4, 0, "zero operator has no highest symbol".into());
    };
    for (r, h) in p.comps.iter().rev() {
        if let Some(j) = h.sdeg_b() {
            return fail(2, *r, format!("component contains B_{}", j));
        }
    }
    for (r, h) in p.comps.iter().rev() {
        if *r == top {
            continue;
        }
        let i = top - r;
        if let Some(l) = h.sdeg_a() {
            if l as i64 >= i + kk as i64 {
                return fail(3, *r, format!("Sdeg_A = {} is not < {} + {}", l, i, kk));
            }
        }
    }
    let s = &p.comps[&top];
    if s.contains_a() {
        return fail(4, top, "highest symbol contains some A_i with i > 0".into());
    }
    if s.sdeg_a() != Some(kk) {
        return fail(4, top, format!("Sdeg_A of the highest symbol is {:?}, expected {}", s.sdeg_a(), kk));
    }
    AqkCheck { holds: true, witness: None }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::rat;
    use crate::diffop::TruncPoly;
    use proptest::prelude::*;

    fn c(k: u32, n: i64) -> CycloScalar {
        CycloScalar::from_int(k, n)
    }

    #[test]
    fn expansion_examples() {
        let g1 = Hcp::monomial(1, 1, 0, 0, c(1, 1)).unwrap();
        assert_eq!(g1.expand(10), GradedOp::from_monomials(1, &[(1, 1, c(1, 1))]));

        // k = 2: A_1 = sum (-2)^m/m! x^m d^m
        let a1 = Hcp::monomial(2, 0, 1, 0, c(2, 1)).unwrap().expand(8);
        for m in 0..=8i64 {
            let expect = Rational::new(BigInt::from(-2).pow(m as u32), crate::arith::factorial(m as usize));
            assert_eq!(a1.coeff(0, m).unwrap(), CycloScalar::from_rational(2, expect));
        }
        assert_eq!(a1.coeff(0, 9), None);

        // B_2 = x delta d = x d - x^2 d^2 + 1/2 x^3 d^3 - ...
        let b2 = Hcp::zero(1, 0).unwrap().with_b(2, c(1, 1)).expand(6);
        let want = [0i64, 1, -1];
        for (n, w) in want.iter().enumerate() {
            assert_eq!(b2.coeff(0, n as i64).unwrap(), c(1, *w));
        }
        assert_eq!(b2.coeff(0, 3).unwrap(), CycloScalar::from_rational(1, rat(1, 2)));
        assert_eq!(b2.coeff(0, 4).unwrap(), CycloScalar::from_rational(1, rat(-1, 6)));
        for n in 0..=5usize {
            let p = TruncPoly::monomial(1, n, c(1, 1));
            let img = b2.apply_to_poly(&p).unwrap();
            let expect = if n == 1 { c(1, 1) } else { c(1, 0) };
            assert_eq!(img.coeff(n), expect);
        }
    }

    #[test]
    fn eigen_examples() {
        let g2 = Hcp::monomial(1, 2, 0, 0, c(1, 1)).unwrap();
        assert_eq!(g2.eigen().eval(3), c(1, 9));
        let x3 = TruncPoly::monomial(1, 3, c(1, 1));
        assert_eq!(g2.expand(8).apply_to_poly(&x3).unwrap(), TruncPoly::monomial(1, 3, c(1, 9)));
        let a1 = Hcp::monomial(2, 0, 1, 0, c(2, 1)).unwrap();
        for n in 0..6u64 {
            assert_eq!(a1.eigen().eval(n), c(2, if n % 2 == 0 { 1 } else { -1 }));
        }
        let b2 = Hcp::zero(1, 0).unwrap().with_b(2, c(1, 1));
        assert_eq!(b2.eigen().eval(1), c(1, 1));
        assert_eq!(b2.eigen().eval(2), c(1, 0));
    }

    #[test]
    fn fit_examples() {
        let xd = GradedOp::from_monomials(1, &[(1, 1, c(1, 1))]);
        let h = fit_hcp(&xd, 0, FitBounds::new(2, 0)).unwrap();
        assert_eq!(h, Hcp::monomial(1, 1, 0, 0, c(1, 1)).unwrap());

        let g = Hcp::monomial(2, 1, 1, 2, c(2, 1)).unwrap();
        let b = FitBounds::new(2, 0);
        let back = fit_hcp(&g.expand(b.required_xcap(2)), 2, b).unwrap();
        assert_eq!(back, g);

        let x2d = GradedOp::from_monomials(1, &[(2, 1, c(1, 1))]);
        assert!(matches!(fit_hcp(&x2d, -1, FitBounds::new(1, 0)), Err(Error::Precondition(_))));
    }

    #[test]
    fn fit_needs_window() {
        let g = Hcp::monomial(2, 1, 1, 0, c(2, 1)).unwrap();
        assert!(matches!(fit_hcp(&g.expand(5), 0, FitBounds::new(2, 0)), Err(Error::Truncation(_))));
        // under-estimated degree is caught by the margin
        let g3 = Hcp::monomial(2, 3, 1, 0, c(2, 1)).unwrap();
        assert!(matches!(fit_hcp(&g3.expand(40), 0, FitBounds::new(1, 0)), Err(Error::NotHcp(_))));
    }

    #[test]
    fn mul_examples() {
        // (Gamma_1 D)(Gamma_1 D) = Gamma_2 D^2 + Gamma_1 D^2
        let g1d = Hcp::monomial(1, 1, 0, 1, c(1, 1)).unwrap();
        let want = Hcp::zero(1, 2).unwrap().with_gamma(2, 0, c(1, 1)).with_gamma(1, 0, c(1, 1));
        assert_eq!(g1d.mul(&g1d).unwrap(), want);
        let id = Hcp::d_pow(3, 0).unwrap();
        let h = Hcp::monomial(3, 2, 1, 4, CycloScalar::xi_pow(3, 1)).unwrap().with_b(2, c(3, 5));
        assert_eq!(h.mul(&id).unwrap(), h);
        // k = 2: (A_1 D)(A_1) = xi A_0 D = -D
        let a1d = Hcp::monomial(2, 0, 1, 1, c(2, 1)).unwrap();
        let a1 = Hcp::monomial(2, 0, 1, 0, c(2, 1)).unwrap();
        assert_eq!(a1d.mul(&a1).unwrap(), Hcp::monomial(2, 0, 0, 1, c(2, -1)).unwrap());
    }

    // closed-form product of Gamma_m A_i1 D^u and Gamma_n A_i2 D^v
    fn closed_form(k: u32, m: u32, i1: u32, u: i64, n: u32, i2: u32, v: i64) -> Hcp {
        let mut h = Hcp::zero(k, u + v).unwrap();
        for t in 0..=n {
            let f = binom(n as i64, t as i64) * BigInt::from(u).pow(n - t);
            let coef = CycloScalar::xi_pow(k, u * i2 as i64).scale_int(&f);
            h = h.with_gamma(t + m, i1 + i2, coef);
        }
        h
    }

    #[test]
    fn aqk_examples() {
        let p = HcpSeries::d_pow(2, 5).unwrap();
        assert!(check_aqk(&p, 0).holds);
        let bad = p.add(&HcpSeries::from_hcp(Hcp::monomial(2, 2, 0, 4, c(2, 1)).unwrap())).unwrap();
        let r = check_aqk(&bad, 0);
        assert!(!r.holds);
        assert_eq!(r.witness.as_ref().unwrap().clause, 3);
        assert_eq!(r.witness.unwrap().order, 4);
        let withb = p.add(&HcpSeries::from_hcp(Hcp::zero(2, 2).unwrap().with_b(1, c(2, 1)))).unwrap();
        assert_eq!(check_aqk(&withb, 0).witness.unwrap().clause, 2);
    }

    #[test]
    fn series_json_round_trip() {
        let s = HcpSeries::from_parts(
            3,
            Some(1),
            vec![
                Hcp::d_pow(3, 4).unwrap(),
                Hcp::monomial(3, 1, 2, 2, CycloScalar::xi_pow(3, 1))
                    .unwrap()
                    .with_b(3, CycloScalar::from_rational(3, rat(-1, 2))),
            ],
        )
        .unwrap();
        let v = s.to_json_value();
        assert_eq!(HcpSeries::from_json_value(&v).unwrap(), s);
    }

    pub(crate) fn arb_scalar(k: u32) -> impl Strategy<Value = CycloScalar> {
        let d = crate::arith::phi_degree(k);
        proptest::collection::vec(-3i64..=3, d)
            .prop_map(move |v| CycloScalar::from_poly(k, v.into_iter().map(int).collect()))
    }

    fn arb_hcp_k(k: u32, lmax: u32, jmax: u32) -> impl Strategy<Value = Hcp> {
        (
            0i64..=3,
            proptest::collection::vec((0..=lmax, 0..k, arb_scalar(k)), 0..4),
            proptest::collection::vec((1..=jmax.max(1), arb_scalar(k)), 0..(jmax as usize + 1).min(3)),
        )
            .prop_map(move |(r, gs, bs)| {
                let mut h = Hcp::zero(k, r).unwrap();
                for (l, i, c) in gs {
                    h = h.with_gamma(l, i, c);
                }
                if jmax > 0 {
                    for (j, c) in bs {
                        h = h.with_b(j, c);
                    }
                }
                h
            })
    }

    fn arb_hcp() -> impl Strategy<Value = Hcp> {
        (1u32..=4).prop_flat_map(|k| arb_hcp_k(k, 4, 3))
    }

    fn arb_hcp_pair() -> impl Strategy<Value = (Hcp, Hcp)> {
        (1u32..=4).prop_flat_map(|k| (arb_hcp_k(k, 3, 2), arb_hcp_k(k, 3, 2)))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]
        #[test]
        fn fit_round_trip(h in arb_hcp()) {
            let b = FitBounds::new(4, 3);
            let back = fit_hcp(&h.expand(b.required_xcap(h.k())), h.r(), b).unwrap();
            prop_assert_eq!(back, h);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(60))]
        #[test]
        fn product_is_homomorphic((a, b) in arb_hcp_pair()) {
            let x = 14;
            let lhs = a.mul(&b).unwrap().expand(x);
            let rhs = a.expand(x).mul(&b.expand(x)).unwrap();
            prop_assert!(lhs.agrees_with(&rhs));
        }

        #[test]
        fn eigen_action(h in arb_hcp(), n in 0usize..=12) {
            let e = h.expand(16);
            let img = e.apply_to_poly(&TruncPoly::monomial(h.k(), n, CycloScalar::one(h.k()))).unwrap();
            let r = h.r();
            let mut want = vec![CycloScalar::zero(h.k()); n + 1];
            if n as i64 >= r {
                let ff = crate::arith::falling(n as i64, r);
                want[n - r as usize] = h.eigen().eval((n as i64 - r) as u64).scale_int(&ff);
            }
            prop_assert!(img.agrees_with(&TruncPoly::exact(h.k(), want)));
        }

        #[test]
        fn sdeg_subadditive((a, b) in arb_hcp_pair()) {
            let p = a.mul(&b).unwrap();
            if let (Some(x), Some(y)) = (a.sdeg_a(), b.sdeg_a()) {
                prop_assert!(p.sdeg_a().is_none_or(|z| z <= x + y));
                if a.is_b_free() && b.is_b_free() && a.k() == 1 {
                    // single residue: leading coefficients multiply
                    prop_assert_eq!(p.sdeg_a(), Some(x + y));
                }
            }
        }

        #[test]
        fn monomial_products_match_closed_form(k in 1u32..=4, m in 0u32..3, n in 0u32..3, i1 in 0u32..4, i2 in 0u32..4, u in 0i64..4, v in 0i64..4) {
            let a = Hcp::monomial(k, m, i1, u, CycloScalar::one(k)).unwrap();
            let b = Hcp::monomial(k, n, i2, v, CycloScalar::one(k)).unwrap();
            prop_assert_eq!(a.mul(&b).unwrap(), closed_form(k, m, i1 % k, u, n, i2 % k, v));
        }
    }
}
