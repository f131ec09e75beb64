//! Schur operators and normal forms.
//!
//! For a monic normalized `Q` of order `q`, `S = 1 + S_{-1} + S_{-2} + ...` is solved order by
//! order from `[d^q, S_t] = -(sum over lower components of Q) * S` at order `t + q`. Inside one
//! order the coefficients obey an upward recurrence in the x-degree:
//!
//! `a_{m+q} (m+q)!/m! = r_m - sum_{j=1}^{q-1} binom(q,j) (m+j)!/m! a_{m+j}`
//!
//! which leaves the low coefficients `a_n`, `max(0,-t) <= n < q`, free (the gauge).

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::arith::{binom, falling, rat, CycloScalar, Rational};
use crate::diffop::{n0, Component, GradedOp, XCap};
use crate::error::{pre, trunc, Error, Result};
use crate::gform::{check_aqk, fit_hcp, AqkCheck, FitBounds, HcpSeries};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Gauge {
    /// Every free coefficient is zero.
    Minimal,
    /// Free coefficients drawn from a seeded generator (a centralizer conjugation of `Minimal`).
    Seeded(u64),
}

#[derive(Clone, Debug)]
pub struct SchurPair {
    pub s: GradedOp,
    pub sinv: GradedOp,
    pub q: i64,
    /// Orders of `S` computed below zero.
    pub depth: u32,
    pub xcap: i64,
    /// Lowest order at which `S^-1 Q S = d^q` was verified.
    pub verified_floor: i64,
}

pub fn default_xcap(q: i64, depth: u32) -> i64 {
    q * depth as i64 + 8
}

fn check_q(q_op: &GradedOp) -> Result<i64> {
    if !q_op.is_monic() {
        return pre("Q must be monic (highest symbol d^q)");
    }
    let q = q_op.ord()?;
    if q < 1 {
        return pre("Q must have positive order");
    }
    if !q_op.is_normalized() {
        return pre("Q must be normalized (no d^(q-1) term)");
    }
    if q_op.deg()? != q {
        return pre(format!("Q must satisfy ord = deg, got ord {} and deg {}", q, q_op.deg()?));
    }
    Ok(q)
}

fn single(op: &GradedOp, t: i64) -> GradedOp {
    let mut comps = BTreeMap::new();
    if let Some(c) = op.component(t) {
        comps.insert(t, c.clone());
    }
    GradedOp::from_parts(op.k(), None, comps).expect("valid")
}

fn gauge_value(g: Gauge, t: i64, n: i64, k: u32) -> CycloScalar {
    match g {
        Gauge::Minimal => CycloScalar::zero(k),
        Gauge::Seeded(seed) => {
            let mix = seed ^ ((t.unsigned_abs()) << 20) ^ ((n as u64) << 4) ^ 0x9e37_79b9;
            let mut rng = ChaCha8Rng::seed_from_u64(mix);
            let num: i64 = rng.gen_range(-3..=3);
            let den: i64 = rng.gen_range(1..=2);
            CycloScalar::from_rational(k, rat(num, den))
        }
    }
}

pub fn schur_operator(q_op: &GradedOp, depth: u32) -> Result<SchurPair> {
    let q = check_q(q_op)?;
    schur_operator_with(q_op, depth, default_xcap(q, depth), Gauge::Minimal)
}

pub fn schur_operator_with(q_op: &GradedOp, depth: u32, xcap: i64, gauge: Gauge) -> Result<SchurPair> {
    let q = check_q(q_op)?;
    let k = q_op.k();
    let depth_i = depth as i64;
    if let Some(f) = q_op.floor() {
        if f > q - depth_i {
            return trunc(format!(
                "Q is known only down to order {}; a Schur operator of depth {} needs order {}",
                f,
                depth,
                q - depth_i
            ));
        }
    }
    let mut s = GradedOp::one(k).truncate_below(-depth_i);
    let mut s_comps: BTreeMap<i64, GradedOp> = BTreeMap::new();
    s_comps.insert(0, GradedOp::one(k));
    let lower: Vec<i64> = q_op.components().map(|(t, _)| t).filter(|&t| t < q).collect();
    for t in (-depth_i..=-1).rev() {
        let target = t + q;
        let mut r = GradedOp::zero(k);
        for &t1 in &lower {
            let t2 = target - t1;
            if t2 <= t || t2 > 0 {
                continue;
            }
            let prod = single(q_op, t1).mul(&s_comps[&t2])?;
            r = r.sub(&single(&prod, target))?;
        }
        let mmin = n0(target);
        let mut a: BTreeMap<i64, CycloScalar> = BTreeMap::new();
        let lo = n0(t);
        for n in lo..q.max(-t) {
            a.insert(n, gauge_value(gauge, t, n, k));
        }
        for m in mmin..=(xcap - q) {
            let Some(rm) = r.coeff(target, m) else {
                return trunc(format!("Schur recursion at order {} needs x-degree {} of the right-hand side", t, m));
            };
            let mut acc = rm;
            for j in 1..q {
                if let Some(v) = a.get(&(m + j)) {
                    let f = binom(q, j) * falling(m + j, j);
                    acc = &acc - &v.scale_int(&f);
                }
            }
            let den = falling(m + q, q);
            let v = acc.scale(&Rational::new(BigInt::one(), den));
            if m + q >= lo {
                a.insert(m + q, v);
            } else if !v.is_zero() {
                return Err(Error::Internal(format!("Schur recursion obstructed at order {}, x-degree {}", t, m)));
            }
        }
        let coeffs: Vec<CycloScalar> =
            (lo..=xcap).map(|n| a.get(&n).cloned().unwrap_or_else(|| CycloScalar::zero(k))).collect();
        let mut comps = BTreeMap::new();
        comps.insert(t, Component { cap: XCap::Upto(xcap), coeffs });
        let st = GradedOp::from_parts(k, None, comps)?;
        s = s.add(&st)?;
        s_comps.insert(t, st);
    }
    let s = s.cap_xdeg(xcap);
    let sinv = invert_unit(&s, depth)?;
    let pair = SchurPair { s, sinv, q, depth, xcap, verified_floor: q - depth_i };
    verify_pair(q_op, &pair)?;
    Ok(pair)
}

fn verify_pair(q_op: &GradedOp, pair: &SchurPair) -> Result<()> {
    let k = q_op.k();
    let id = pair.s.mul(&pair.sinv)?.sub(&GradedOp::one(k))?;
    if !id.is_zero_in_window() {
        return Err(Error::Internal("S * S^-1 differs from 1 inside the window".into()));
    }
    let conj = pair.sinv.mul(&q_op.mul(&pair.s)?)?.sub(&GradedOp::d_pow(k, pair.q as u32))?;
    if !conj.is_zero_in_window() || conj.floor().is_some_and(|f| f > pair.verified_floor) {
        return Err(Error::Internal(format!(
            "S^-1 Q S - d^q does not vanish on the window (floor {:?})",
            conj.floor()
        )));
    }
    Ok(())
}

/// Inverse of `S = 1 + (negative orders)`, solved order by order down to `-depth`.
pub fn invert_unit(s: &GradedOp, depth: u32) -> Result<GradedOp> {
    let k = s.k();
    if s.ord()? != 0 {
        return pre("invert_unit needs ord(S) = 0");
    }
    match s.component(0) {
        Some(c) if !c.coeffs.is_empty() && c.coeffs[0].is_one() && c.coeffs[1..].iter().all(|v| v.is_zero()) => {}
        _ => return pre("invert_unit needs S_0 = 1"),
    }
    let floor = s.floor().map_or(-(depth as i64), |f| f.max(-(depth as i64)));
    let mut parts: BTreeMap<i64, GradedOp> = BTreeMap::new();
    parts.insert(0, GradedOp::one(k));
    let mut acc = GradedOp::one(k);
    for t in (floor..=-1).rev() {
        let mut v = GradedOp::zero(k);
        for t1 in t..=-1 {
            if s.component(t1).is_none() {
                continue;
            }
            let prod = single(s, t1).mul(&parts[&(t - t1)])?;
            v = v.sub(&single(&prod, t))?;
        }
        acc = acc.add(&v)?;
        parts.insert(t, v);
    }
    Ok(acc.truncate_below(floor))
}

// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct NormalForm {
    pub series: HcpSeries,
    pub graded: GradedOp,
    pub p: i64,
    pub q: i64,
    pub depth: u32,
    pub gauge: Gauge,
    pub schur_xcap: i64,
    pub bounds: Vec<(i64, FitBounds)>,
    pub escalated: bool,
    pub aqk: AqkCheck,
}

#[derive(Clone, Copy, Debug)]
pub struct NormalFormOptions {
    pub depth: u32,
    pub gauge: Gauge,
    pub margin: u32,
}

impl SchurPair {
    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::json!({
            "q": self.q,
            "depth": self.depth,
            "xcap": self.xcap,
            "verifiedFloor": self.verified_floor,
            "s": self.s.to_json_value(),
            "sinv": self.sinv.to_json_value(),
        })
    }
}

impl NormalForm {
    /// Cached form read back by `newton` and `classify`; `series` is the G-form series.
    pub fn to_json_value(&self) -> serde_json::Value {
        let gauge = match self.gauge {
            Gauge::Minimal => serde_json::json!("minimal"),
            Gauge::Seeded(s) => serde_json::json!({ "seeded": s }),
        };
        serde_json::json!({
            "p": self.p,
            "q": self.q,
            "depth": self.depth,
            "gauge": gauge,
            "floor": self.series.floor(),
            "schurXcap": self.schur_xcap,
            "escalated": self.escalated,
            "aqk": self.aqk,
            "gform": self.series.to_string(),
            "series": self.series.to_json_value(),
        })
    }
}

impl NormalFormOptions {
    pub fn new(depth: u32) -> Self {
        NormalFormOptions { depth, gauge: Gauge::Minimal, margin: 8 }
    }
}

pub fn normal_form(p_op: &GradedOp, q_op: &GradedOp, depth: u32) -> Result<NormalForm> {
    normal_form_with(p_op, q_op, NormalFormOptions::new(depth))
}

pub fn normal_form_with(p_op: &GradedOp, q_op: &GradedOp, opts: NormalFormOptions) -> Result<NormalForm> {
    if !p_op.is_monic() {
        return pre("P must be monic (highest symbol d^p)");
    }
    let p = p_op.ord()?;
    if p_op.deg()? != p {
        return pre(format!("P must satisfy ord = deg, got ord {} and deg {}", p, p_op.deg()?));
    }
    let q = check_q(q_op)?;
    if p_op.k() != q_op.k() {
        return Err(Error::ContextMismatch(p_op.k(), q_op.k()));
    }
    let kq = q as u32;
    let (p_op, q_op) = (p_op.embed(kq)?, q_op.embed(kq)?);
    let floor = (p - opts.depth as i64).max(0);
    let s_depth = (p - floor) as u32;
    let mut bounds: Vec<(i64, FitBounds)> = (floor..=p)
        .map(|r| (r, FitBounds { dmax: (p - r - 1).max(0) as u32, nbmax: 0, margin: opts.margin }))
        .collect();
    let mut escalated = false;
    loop {
        let need = bounds.iter().map(|(_, b)| b.required_xcap(kq)).max().unwrap_or(0);
        let xs = need + p;
        let pair = if s_depth == 0 {
            SchurPair { s: GradedOp::one(kq), sinv: GradedOp::one(kq), q, depth: 0, xcap: xs, verified_floor: q }
        } else {
            schur_operator_with(&q_op, s_depth, xs, opts.gauge)?
        };
        let pp = pair.sinv.mul(&p_op.mul(&pair.s)?)?.truncate_below(floor);
        let mut comps = Vec::new();
        let mut failure: Option<Error> = None;
        for (r, b) in &bounds {
            match fit_hcp(&pp, *r, *b) {
                Ok(h) => comps.push(h),
                Err(e @ Error::NotHcp(_)) => {
                    failure = Some(e);
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        if let Some(e) = failure {
            if escalated {
                return trunc(format!("normal-form fit failed after escalating bounds ({}); insufficient depth", e));
            }
            escalated = true;
            bounds = bounds.iter().map(|(r, b)| (*r, b.escalated(kq))).collect();
            continue;
        }
        let series = HcpSeries::from_parts(kq, Some(floor), comps)?;
        let aqk = check_aqk(&series, 0);
        if !aqk.holds {
            let w = aqk.witness.as_ref().unwrap();
            return Err(Error::PropertyViolation(format!(
                "normal form violates A_q(0): clause {} at order {} ({})",
                w.clause, w.order, w.detail
            )));
        }
        return Ok(NormalForm {
            series,
            graded: pp,
            p,
            q,
            depth: opts.depth,
            gauge: opts.gauge,
            schur_xcap: xs,
            bounds,
            escalated,
            aqk,
        });
    }
}
