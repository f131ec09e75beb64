//! Commutativity criterion for normal forms with a restriction top line.
//!
//! Polynomials `F(X, Y)` are split into `(p, q)`-homogeneous pieces, evaluated at operator
//! pairs as `sum c_{u,v} P^u Q^v`, searched for as Burchnall-Chaundy annihilators, and checked
//! against the `HS`-coefficient identities of a restriction-line normal form.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};
use serde_json::json;

use crate::arith::{binom, fmt_rational, int, Rational};
use crate::diffop::GradedOp;
use crate::error::{pre, trunc, Error, Result};
use crate::gform::{Hcp, HcpSeries};
use crate::newton::{classify_top_line, classify_unchecked, e_set, filtration_hs, TopLine, TopLineClass, Weight};
use crate::parse::{parse, OpExpr};
use crate::powerform::OpAlgebra;
use crate::schur::normal_form;

/// `F(X, Y)` with rational coefficients, keyed by `(u, v)` for `X^u Y^v`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BivarPoly {
    terms: BTreeMap<(u32, u32), Rational>,
}

impl BivarPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: Rational) -> Self {
        Self::monomial(0, 0, c)
    }

    pub fn monomial(u: u32, v: u32, c: Rational) -> Self {
        let mut p = Self::zero();
        p.add_term(u, v, c);
        p
    }

    pub fn from_terms(ts: &[(u32, u32, Rational)]) -> Self {
        let mut p = Self::zero();
        for (u, v, c) in ts {
            p.add_term(*u, *v, c.clone());
        }
        p
    }

    pub fn add_term(&mut self, u: u32, v: u32, c: Rational) {
        let s = self.terms.remove(&(u, v)).unwrap_or_else(Rational::zero) + c;
        if !s.is_zero() {
            self.terms.insert((u, v), s);
        }
    }

    pub fn terms(&self) -> &BTreeMap<(u32, u32), Rational> {
        &self.terms
    }

    pub fn coeff(&self, u: u32, v: u32) -> Rational {
        self.terms.get(&(u, v)).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, o: &BivarPoly) -> BivarPoly {
        let mut r = self.clone();
        for ((u, v), c) in &o.terms {
            r.add_term(*u, *v, c.clone());
        }
        r
    }

    pub fn mul(&self, o: &BivarPoly) -> BivarPoly {
        let mut r = BivarPoly::zero();
        for ((u1, v1), c1) in &self.terms {
            for ((u2, v2), c2) in &o.terms {
                r.add_term(u1 + u2, v1 + v2, c1 * c2);
            }
        }
        r
    }

    pub fn scale(&self, c: &Rational) -> BivarPoly {
        let mut r = BivarPoly::zero();
        for ((u, v), a) in &self.terms {
            r.add_term(*u, *v, a * c);
        }
        r
    }

    /// Parses text in `X`, `Y`, rationals, `+ - * ^` and parentheses.
    pub fn parse(src: &str) -> Result<BivarPoly> {
        if src.contains(['x', 'd']) {
            return Err(Error::Parse { line: 1, col: 1, msg: "polynomials use the variables X and Y".into() });
        }
        let mapped: String = src
            .chars()
            .map(|c| match c {
                'X' => 'x',
                'Y' => 'd',
                c => c,
            })
            .collect();
        poly_of_expr(&parse(&mapped, None)?)
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        json!({
            "text": self.to_string(),
            "terms": self.terms.iter().rev().map(|((u, v), c)| json!([u, v, fmt_rational(c)])).collect::<Vec<_>>(),
        })
    }
}

fn poly_of_expr(e: &OpExpr) -> Result<BivarPoly> {
    Ok(match e {
        OpExpr::Rat(r) => BivarPoly::constant(r.clone()),
        OpExpr::X => BivarPoly::monomial(1, 0, Rational::one()),
        OpExpr::D => BivarPoly::monomial(0, 1, Rational::one()),
        OpExpr::Xi | OpExpr::G(_) => return pre("polynomial coefficients must be rational"),
        OpExpr::Neg(a) => poly_of_expr(a)?.scale(&int(-1)),
        OpExpr::Add(a, b) => poly_of_expr(a)?.add(&poly_of_expr(b)?),
        OpExpr::Sub(a, b) => poly_of_expr(a)?.add(&poly_of_expr(b)?.scale(&int(-1))),
        OpExpr::Mul(a, b) => poly_of_expr(a)?.mul(&poly_of_expr(b)?),
        OpExpr::Pow(a, n) => {
            let base = poly_of_expr(a)?;
            let mut acc = BivarPoly::constant(Rational::one());
            for _ in 0..*n {
                acc = acc.mul(&base);
            }
            acc
        }
    })
}

impl fmt::Display for BivarPoly {
    /// Highest total degree first, then descending powers of `X`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut ts: Vec<_> = self.terms.iter().collect();
        ts.sort_by(|a, b| (b.0 .0 + b.0 .1, b.0 .0).cmp(&(a.0 .0 + a.0 .1, a.0 .0)));
        for (n, ((u, v), c)) in ts.into_iter().enumerate() {
            let neg = c.is_negative();
            let a = c.abs();
            match (n, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            let mut parts = Vec::new();
            if !a.is_one() || (*u == 0 && *v == 0) {
                parts.push(fmt_rational(&a));
            }
            for (name, e) in [("X", *u), ("Y", *v)] {
                match e {
                    0 => {}
                    1 => parts.push(name.to_string()),
                    _ => parts.push(format!("{}^{}", name, e)),
                }
            }
            write!(f, "{}", parts.join("*"))?;
        }
        Ok(())
    }
}

/// A `(p, q)`-homogeneous piece: `p*u + q*v = n_f` for every term.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HomogPiece {
    pub n_f: i64,
    /// `(k_l, u_l, v_l)` with `u` strictly decreasing.
    pub terms: Vec<(Rational, u32, u32)>,
}

impl HomogPiece {
    pub fn to_poly(&self) -> BivarPoly {
        BivarPoly::from_terms(&self.terms.iter().map(|(c, u, v)| (*u, *v, c.clone())).collect::<Vec<_>>())
    }

    pub fn coeff_sum(&self) -> Rational {
        self.terms.iter().map(|(c, _, _)| c.clone()).sum()
    }
}

pub fn weighted_decompose(f: &BivarPoly, p: i64, q: i64) -> Result<Vec<HomogPiece>> {
    if f.is_zero() {
        return pre("weighted_decompose needs a nonzero polynomial");
    }
    let mut by: BTreeMap<i64, Vec<(Rational, u32, u32)>> = BTreeMap::new();
    for ((u, v), c) in &f.terms {
        by.entry(p * *u as i64 + q * *v as i64).or_default().push((c.clone(), *u, *v));
    }
    Ok(by
        .into_iter()
        .rev()
        .map(|(n_f, mut terms)| {
            terms.sort_by(|a, b| b.1.cmp(&a.1));
            HomogPiece { n_f, terms }
        })
        .collect())
}

/// `sum_l binom(u_l, i) k_l`; the identity of type `i` holds when this vanishes.
pub fn type_identity(piece: &HomogPiece, i: u32) -> Rational {
    piece.terms.iter().map(|(c, u, _)| c * Rational::from_integer(binom(*u as i64, i as i64))).sum()
}

/// Recover the coefficients of a piece from its type identities, eliminating downward
/// from the largest `u`.
pub fn coefficients_from_identities(us: &[u32], ids: &[Rational]) -> Vec<Rational> {
    let mut ks = vec![Rational::zero(); us.len()];
    let mut order: Vec<usize> = (0..us.len()).collect();
    order.sort_by(|a, b| us[*b].cmp(&us[*a]));
    for (pos, &idx) in order.iter().enumerate() {
        let i = us[idx];
        let mut rest = ids[i as usize].clone();
        for &other in &order[..pos] {
            rest -= &ks[other] * Rational::from_integer(binom(us[other] as i64, i as i64));
        }
        ks[idx] = rest;
    }
    ks
}

// ---------------------------------------------------------------------------

/// `F(P, Q) = sum c_{u,v} P^u Q^v` with `P`-powers on the left.
pub fn evaluate_poly<A: OpAlgebra>(f: &BivarPoly, p: &A, q: &A) -> Result<A> {
    let umax = f.terms.keys().map(|(u, _)| *u).max().unwrap_or(0);
    let vmax = f.terms.keys().map(|(_, v)| *v).max().unwrap_or(0);
    let wrap = |e: Error, u: u32, v: u32| match e {
        Error::Truncation(m) => {
            Error::Truncation(format!("evaluating X^{} Y^{}: {} (a deeper input window is required)", u, v, m))
        }
        e => e,
    };
    let mut pp = vec![p.one_like()];
    for u in 1..=umax {
        let next = pp.last().unwrap().mul_op(p).map_err(|e| wrap(e, u, 0))?;
        pp.push(next);
    }
    let mut qq = vec![q.one_like()];
    for v in 1..=vmax {
        let next = qq.last().unwrap().mul_op(q).map_err(|e| wrap(e, 0, v))?;
        qq.push(next);
    }
    let mut acc = p.zero_like();
    for ((u, v), c) in &f.terms {
        let m = pp[*u as usize].mul_op(&qq[*v as usize]).map_err(|e| wrap(e, *u, *v))?;
        acc = acc.add_op(&m.scale_op(c))?;
    }
    Ok(acc)
}

/// Basis of the right nullspace of a rational matrix given by rows.
fn nullspace(rows: impl Iterator<Item = Vec<Rational>>, ncols: usize) -> Vec<Vec<Rational>> {
    // Reduced row echelon form built incrementally; `piv[c]` is the row pivoting column c.
    let mut basis: Vec<Vec<Rational>> = Vec::new();
    let mut piv: Vec<Option<usize>> = vec![None; ncols];
    for mut row in rows {
        for c in 0..ncols {
            if row[c].is_zero() {
                continue;
            }
            if let Some(r) = piv[c] {
                let f = row[c].clone();
                for j in 0..ncols {
                    if !basis[r][j].is_zero() {
                        let d = &f * &basis[r][j];
                        row[j] -= d;
                    }
                }
            }
        }
        let Some(c) = (0..ncols).find(|c| !row[*c].is_zero()) else { continue };
        let inv = row[c].recip();
        for x in row.iter_mut() {
            *x *= &inv;
        }
        for b in basis.iter_mut() {
            if !b[c].is_zero() {
                let f = b[c].clone();
                for j in 0..ncols {
                    if !row[j].is_zero() {
                        let d = &f * &row[j];
                        b[j] -= d;
                    }
                }
            }
        }
        piv[c] = Some(basis.len());
        basis.push(row);
        if basis.len() == ncols {
            return Vec::new();
        }
    }
    let mut out = Vec::new();
    for free in (0..ncols).filter(|c| piv[*c].is_none()) {
        let mut v = vec![Rational::zero(); ncols];
        v[free] = Rational::one();
        for (c, r) in piv.iter().enumerate() {
            if let Some(r) = r {
                v[c] = -basis[*r][free].clone();
            }
        }
        out.push(v);
    }
    out
}

/// Known coordinates of an operator: `(order, x-degree, basis index) -> rational`.
fn coordinates(op: &GradedOp) -> BTreeMap<(i64, i64, usize), Rational> {
    let mut m = BTreeMap::new();
    for (t, c) in op.components() {
        for (off, s) in c.coeffs.iter().enumerate() {
            for (i, r) in s.coeffs().iter().enumerate() {
                if !r.is_zero() {
                    m.insert((t, crate::diffop::n0(t) + off as i64, i), r.clone());
                }
            }
        }
    }
    m
}

fn known(op: &GradedOp, key: &(i64, i64, usize)) -> bool {
    op.coeff(key.0, key.1).is_some()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BcCertificate {
    pub poly: BivarPoly,
    pub weight: i64,
    /// Orders depth used for the search (`None` when the inputs were exact).
    pub depth: Option<u32>,
    pub window_verified: bool,
    /// Re-evaluation at doubled depth also vanished (always true for exact inputs).
    pub double_depth_verified: bool,
}

impl BcCertificate {
    pub fn to_json_value(&self) -> serde_json::Value {
        json!({
            "poly": self.poly.to_json_value(),
            "weight": self.weight,
            "depth": self.depth,
            "windowVerified": self.window_verified,
            "doubleDepthVerified": self.double_depth_verified,
        })
    }
}

fn truncate_depth(op: &GradedOp, depth: u32) -> Result<GradedOp> {
    if op.is_total() {
        return Ok(op.clone());
    }
    Ok(op.truncate_below(op.ord()? - depth as i64))
}

/// Minimal-weight `F` with `F(P, Q) = 0` on the evaluation window, or `None`.
pub fn bc_certificate(p: &GradedOp, q: &GradedOp, wmax: i64, depth: u32) -> Result<Option<BcCertificate>> {
    if !p.is_monic() || !q.is_monic() {
        return pre("bc_certificate needs monic P and Q");
    }
    let (po, qo) = (p.ord()?, q.ord()?);
    if po < 1 || qo < 1 {
        return pre("bc_certificate needs positive orders");
    }
    let exact = p.is_total() && q.is_total();
    let (pt, qt) = (truncate_depth(p, depth)?, truncate_depth(q, depth)?);
    let mut monos: Vec<(i64, u32, u32)> = Vec::new();
    for u in 0..=(wmax / po) as u32 {
        for v in 0..=((wmax - po * u as i64) / qo) as u32 {
            monos.push((po * u as i64 + qo * v as i64, u, v));
        }
    }
    monos.sort();
    let mut evals: Vec<GradedOp> = Vec::new();
    for (_, u, v) in &monos {
        let f = BivarPoly::monomial(*u, *v, Rational::one());
        evals.push(evaluate_poly(&f, &pt, &qt)?);
    }
    let coords: Vec<_> = evals.iter().map(coordinates).collect();
    let weights: Vec<i64> = {
        let mut w: Vec<i64> = monos.iter().map(|m| m.0).collect();
        w.dedup();
        w
    };
    for w in weights {
        let n = monos.iter().take_while(|m| m.0 <= w).count();
        let mut keys: Vec<(i64, i64, usize)> = coords[..n].iter().flat_map(|c| c.keys().copied()).collect();
        keys.sort();
        keys.dedup();
        let rows = keys
            .iter()
            .filter(|k| evals[..n].iter().all(|e| known(e, k)))
            .map(|k| coords[..n].iter().map(|c| c.get(k).cloned().unwrap_or_else(Rational::zero)).collect());
        let ns = nullspace(rows, n);
        let Some(mut vec) = ns.into_iter().last() else { continue };
        let lead = vec.iter().rev().find(|c| !c.is_zero()).unwrap().clone();
        for c in vec.iter_mut() {
            *c /= &lead;
        }
        let mut poly = BivarPoly::zero();
        for (i, c) in vec.iter().enumerate() {
            poly.add_term(monos[i].1, monos[i].2, c.clone());
        }
        let double = if exact {
            true
        } else {
            let (p2, q2) = (truncate_depth(p, 2 * depth)?, truncate_depth(q, 2 * depth)?);
            let deep_enough = [p, q].iter().all(|o| o.floor().is_none_or(|f| f <= o.ord().unwrap() - 2 * depth as i64));
            deep_enough && evaluate_poly(&poly, &p2, &q2)?.is_zero_in_window()
        };
        return Ok(Some(BcCertificate {
            poly,
            weight: w,
            depth: if exact { None } else { Some(depth) },
            window_verified: true,
            double_depth_verified: double,
        }));
    }
    Ok(None)
}

// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HsCheck {
    pub s: u32,
    pub sigma: Rational,
    pub n_f: i64,
    /// The first vertex `(a0, b0)` after `(0, p)` on the restriction line.
    pub vertex: (u32, i64),
    pub lhs: HcpSeries,
    pub rhs: HcpSeries,
    /// `s = 0`, or the type identities `0..s` of the top piece all hold.
    pub asserted: bool,
    pub equal: bool,
    /// The restriction slope coincides with `p/q`.
    pub sigma_is_p_over_q: bool,
}

/// `HS^{s a0}_{N_F}(F(P', d^q))` against `sum_j binom(u_j, s) k_j L0^s d^(N_F - s p)`.
pub fn hs_coefficient_check(pprime: &HcpSeries, q: u32, f: &BivarPoly, s: u32) -> Result<HsCheck> {
    let class = classify_unchecked(pprime);
    let TopLine::Restriction { sigma, vertices } = &class.line else {
        return pre(format!("P' must have a restriction top line, found {}", class.line.name()));
    };
    if !pprime.is_monic() || !pprime.is_b_free() {
        return pre("P' must be monic and B-free");
    }
    let p = pprime.top().unwrap();
    let (a0, b0) = *vertices.iter().filter(|(l, _)| *l > 0).min().unwrap();
    let pieces = weighted_decompose(f, p, q as i64)?;
    let top = &pieces[0];
    let w = Weight::unit(sigma.clone())?;
    let dq = HcpSeries::d_pow(pprime.k(), q as i64)?;
    let value = evaluate_poly(f, pprime, &dq)?;
    let m = (s * a0) as i64;
    if let Some(fl) = value.floor() {
        if int(fl) > int(top.n_f) - sigma * int(m) {
            return trunc(format!("F(P', d^q) is known only down to order {}", fl));
        }
    }
    let lhs = filtration_hs(&value, &int(top.n_f), m, &w);
    let lhs = HcpSeries::from_parts(lhs.k(), None, lhs.components().map(|(_, h)| h.clone()).collect())?;
    let mut l0 = Hcp::zero(pprime.k(), b0)?;
    for ((l, i), c) in pprime.component(b0).unwrap().gamma() {
        if *l == a0 {
            l0 = l0.with_gamma(*l, *i, c.clone());
        }
    }
    let mut rhs = HcpSeries::zero(pprime.k());
    let coef = type_identity(top, s);
    let rest = top.n_f - s as i64 * p;
    if !coef.is_zero() && rest >= 0 {
        let l0s = HcpSeries::from_hcp(l0).pow(s)?;
        rhs = l0s.mul(&HcpSeries::d_pow(pprime.k(), rest)?)?.scale_rational(&coef);
    }
    let asserted = s == 0 || (0..s).all(|i| type_identity(top, i).is_zero());
    let equal = lhs == rhs;
    Ok(HsCheck {
        s,
        sigma: sigma.clone(),
        n_f: top.n_f,
        vertex: (a0, b0),
        lhs,
        rhs,
        asserted,
        equal,
        sigma_is_p_over_q: sigma * int(q as i64) == int(p),
    })
}

// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct PairReport {
    pub p_text: String,
    pub q_text: String,
    pub depth: u32,
    pub commutes: bool,
    pub commutator_exact: bool,
    pub classification: TopLineClass,
    pub doubled: TopLineClass,
    pub window: (i64, Option<i64>),
    pub sdeg_profile: Vec<(i64, Option<u32>)>,
    pub certificate: Option<BcCertificate>,
    pub type_identities: Vec<(u32, Rational)>,
    pub verdict: String,
    pub tentative: bool,
}

impl PairReport {
    pub fn to_json_value(&self) -> serde_json::Value {
        json!({
            "inputs": {"p": self.p_text, "q": self.q_text, "depth": self.depth},
            "commutes": self.commutes,
            "commutatorExact": self.commutator_exact,
            "classification": self.classification.to_json(),
            "certificate": self.certificate.as_ref().map(|c| c.to_json_value()),
            "typeIdentities": self.type_identities.iter().map(|(i, v)| json!([i, fmt_rational(v)])).collect::<Vec<_>>(),
            "windows": {
                "normalForm": {"top": self.window.0, "floor": self.window.1},
                "doubledDepth": 2 * self.depth,
                "doubledClassification": self.doubled.to_json(),
                "stable": self.classification == self.doubled,
            },
            "sdegProfile": self.sdeg_profile.iter().map(|(j, s)| json!([j, s])).collect::<Vec<_>>(),
            "verdict": self.verdict,
            "tentative": self.tentative,
        })
    }
}

pub fn sdeg_profile(p: &HcpSeries) -> Vec<(i64, Option<u32>)> {
    let Some(top) = p.top() else { return Vec::new() };
    let lo = p.floor().unwrap_or_else(|| p.components().next().map(|(j, _)| *j).unwrap_or(top));
    (lo..=top).rev().map(|j| (j, p.component(j).and_then(|h| h.sdeg_a()))).collect()
}

pub fn classify_pair(p: &GradedOp, q: &GradedOp, depth: u32, candidate: Option<&BivarPoly>) -> Result<PairReport> {
    let comm = p.commutator(q)?;
    let commutes = comm.is_zero_in_window();
    let nf = normal_form(p, q, depth)?;
    let class = classify_top_line(&nf.series)?;
    let nf2 = normal_form(p, q, 2 * depth)?;
    let doubled = classify_top_line(&nf2.series)?;
    let (po, qo) = (p.ord()?, q.ord()?);
    let certificate = if commutes { bc_certificate(p, q, po * qo, depth)? } else { None };
    let table_poly = candidate.cloned().or_else(|| certificate.as_ref().map(|c| c.poly.clone()));
    let mut type_identities = Vec::new();
    if let Some(f) = table_poly.filter(|f| !f.is_zero()) {
        let top = &weighted_decompose(&f, po, qo)?[0];
        let umax = top.terms.iter().map(|t| t.1).max().unwrap_or(0);
        type_identities = (0..=umax).map(|i| (i, type_identity(top, i))).collect();
    }
    let stable = class == doubled;
    let verdict = match (&class.line, commutes) {
        (TopLine::Restriction { .. }, _) if !class.tentative => {
            "algebraically independent: the normal form has a restriction top line, so no Burchnall-Chaundy relation exists".to_string()
        }
        (_, true) => match &certificate {
            Some(c) => format!("commuting; annihilating polynomial {} found at weight {}", c.poly, c.weight),
            None => "commuting in window; no annihilator up to the searched weight (bounded evidence only)".to_string(),
        },
        (TopLine::Restriction { sigma, .. }, false) => format!(
            "noncommuting; restriction top line with sigma = {} seen in the window but not certified",
            fmt_rational(sigma)
        ),
        (TopLine::Asymptotic { .. }, false) => {
            "noncommuting; asymptotic top line: the criterion does not apply".to_string()
        }
        (TopLine::SdegZero, false) => "noncommuting; Sdeg_A = 0 throughout the window".to_string(),
        (TopLine::Undetermined, false) => "undetermined: the window holds only the top order".to_string(),
    };
    let tentative = class.tentative || !stable || certificate.as_ref().is_some_and(|c| !c.double_depth_verified);
    Ok(PairReport {
        p_text: p.to_string(),
        q_text: q.to_string(),
        depth,
        commutes,
        commutator_exact: comm.is_total(),
        classification: class,
        doubled,
        window: (nf.p, nf.series.floor()),
        sdeg_profile: sdeg_profile(&nf.series),
        certificate,
        type_identities,
        verdict,
        tentative,
    })
}

/// Newton points of the normal form, re-exported for reports.
pub fn normal_form_points(p: &HcpSeries) -> Vec<(u32, i64)> {
    e_set(p).points.iter().map(|x| (x.l, x.j)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{rat, CycloScalar};
    use crate::parse::eval_graded;
    use proptest::prelude::*;

    fn op(src: &str) -> GradedOp {
        eval_graded(&parse(src, None).unwrap(), 1, 0).unwrap()
    }

    fn poly(s: &str) -> BivarPoly {
        BivarPoly::parse(s).unwrap()
    }

    #[test]
    fn parse_and_print() {
        let f = poly("X^2 - Y^3 + 1");
        assert_eq!(f.to_string(), "-Y^3 + X^2 + 1");
        assert_eq!(poly("X*Y - Y*X"), BivarPoly::zero());
        assert_eq!(poly("(X+Y)^2").coeff(1, 1), int(2));
        assert!(BivarPoly::parse("x + 1").is_err());
        assert!(BivarPoly::parse("X + xi").is_err());
    }

    #[test]
    fn decompose() {
        let ps = weighted_decompose(&poly("X^2 - Y^3"), 3, 2).unwrap();
        assert_eq!(ps.len(), 1);
        assert_eq!(ps[0].n_f, 6);
        assert_eq!(ps[0].terms, vec![(int(1), 2, 0), (int(-1), 0, 3)]);
        let ps = weighted_decompose(&poly("X^2 - Y^3 + 1"), 3, 2).unwrap();
        assert_eq!(ps.iter().map(|p| p.n_f).collect::<Vec<_>>(), vec![6, 0]);
        let ps = weighted_decompose(&poly("X*Y + X"), 2, 3).unwrap();
        assert_eq!(ps.iter().map(|p| p.n_f).collect::<Vec<_>>(), vec![5, 2]);
        assert!(weighted_decompose(&BivarPoly::zero(), 2, 3).is_err());
    }

    #[test]
    fn type_identities() {
        let top = &weighted_decompose(&poly("X^2 - Y^3"), 3, 2).unwrap()[0];
        let ids: Vec<Rational> = (0..3).map(|i| type_identity(top, i)).collect();
        assert_eq!(ids, vec![int(0), int(2), int(1)]);
    }

    #[test]
    fn evaluation() {
        let f = poly("X^2 - Y^3");
        assert!(evaluate_poly(&f, &op("d^3"), &op("d^2")).unwrap().is_exact_zero());
        let got = evaluate_poly(&poly("X*Y + 2"), &op("d + x"), &op("d")).unwrap();
        assert_eq!(got, op("d^2 + x*d + 2"));
    }

    #[test]
    fn certificates() {
        let c = bc_certificate(&op("d^3"), &op("d^2"), 12, 8).unwrap().unwrap();
        assert_eq!(c.poly, poly("X^2 - Y^3"));
        assert_eq!(c.weight, 6);
        assert!(c.double_depth_verified && c.depth.is_none());
        assert!(bc_certificate(&op("d^3 + x"), &op("d^2 + x"), 12, 8).unwrap().is_none());
    }

    fn restriction_fixture() -> HcpSeries {
        HcpSeries::from_parts(
            1,
            None,
            vec![Hcp::d_pow(1, 3).unwrap(), Hcp::monomial(1, 1, 0, 2, CycloScalar::one(1)).unwrap()],
        )
        .unwrap()
    }

    #[test]
    fn hs_check_examples() {
        let pp = restriction_fixture();
        let f = poly("X^2 - Y^3");
        let c0 = hs_coefficient_check(&pp, 2, &f, 0).unwrap();
        assert!(c0.asserted && c0.equal);
        assert!(c0.lhs.is_zero());
        assert_eq!(c0.vertex, (1, 2));
        let c1 = hs_coefficient_check(&pp, 2, &f, 1).unwrap();
        assert!(c1.asserted && c1.equal);
        let want = HcpSeries::from_hcp(Hcp::monomial(1, 1, 0, 5, CycloScalar::from_int(1, 2)).unwrap());
        assert_eq!(c1.lhs, want);
        let g = poly("X^2 + Y^3");
        let g0 = hs_coefficient_check(&pp, 2, &g, 0).unwrap();
        assert_eq!(g0.lhs, HcpSeries::d_pow(1, 6).unwrap().scale_rational(&int(2)));
        assert!(g0.equal);
        let g1 = hs_coefficient_check(&pp, 2, &g, 1).unwrap();
        assert!(!g1.asserted);
        assert!(hs_coefficient_check(&HcpSeries::d_pow(1, 3).unwrap(), 2, &f, 0).is_err());
    }

    #[test]
    fn classify_small_pairs() {
        let r = classify_pair(&op("d^3"), &op("d^2"), 6, None).unwrap();
        assert!(r.commutes);
        assert_eq!(r.certificate.as_ref().unwrap().poly, poly("X^2 - Y^3"));
        assert_eq!(r.classification.line, TopLine::SdegZero);
        assert_eq!(r.type_identities, vec![(0, int(0)), (1, int(2)), (2, int(1))]);
        let r = classify_pair(&op("d^3 + x"), &op("d^2 + x"), 8, None).unwrap();
        assert!(!r.commutes && r.certificate.is_none());
        assert!(r.tentative);
        let j = r.to_json_value();
        assert_eq!(j["commutes"], false);
        assert!(j["verdict"].as_str().unwrap().starts_with("noncommuting"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn identities_determine_piece(ks in prop::collection::vec(-5i64..6, 1..6)) {
            // Distinct u's, one per term.
            let us: Vec<u32> = (0..ks.len() as u32).map(|i| 2 * i).collect();
            let piece = HomogPiece {
                n_f: 0,
                terms: us.iter().rev().zip(ks.iter().rev()).map(|(u, k)| (int(*k), *u, 0)).collect(),
            };
            let umax = *us.iter().max().unwrap();
            let ids: Vec<Rational> = (0..=umax).map(|i| type_identity(&piece, i)).collect();
            let back = coefficients_from_identities(&us, &ids);
            prop_assert_eq!(back, ks.iter().map(|k| int(*k)).collect::<Vec<_>>());
            if ids.iter().all(|x| x.is_zero()) {
                prop_assert!(ks.iter().all(|k| *k == 0));
            }
        }

        #[test]
        fn top_degree_of_evaluation(
            cs in prop::collection::vec((0u32..3, 0u32..3, -3i64..4), 1..5),
            a in -2i64..3,
        ) {
            let f = BivarPoly::from_terms(&cs.iter().map(|(u, v, c)| (*u, *v, int(*c))).collect::<Vec<_>>());
            prop_assume!(!f.is_zero());
            let p = op("d^2").add(&op("x*d").scale_rational(&int(a))).unwrap();
            let q = op("d^3 + x");
            let val = evaluate_poly(&f, &p, &q).unwrap();
            let top = &weighted_decompose(&f, 2, 3).unwrap()[0];
            match val.ord() {
                Ok(o) => {
                    prop_assert!(o <= top.n_f);
                    prop_assert_eq!(o == top.n_f, !top.coeff_sum().is_zero());
                }
                Err(_) => prop_assert!(top.coeff_sum().is_zero()),
            }
        }
    }

    #[test]
    fn nullspace_basic() {
        let rows = vec![vec![int(1), int(2), int(3)], vec![int(2), int(4), int(6)], vec![int(0), int(1), int(1)]];
        let ns = nullspace(rows.into_iter(), 3);
        assert_eq!(ns, vec![vec![int(-1), int(-1), int(1)]]);
        let _ = rat(1, 2);
    }
}
