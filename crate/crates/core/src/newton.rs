//! Newton region of an operator whose components are HCPs.
//!
//! Points are `(l, j)` with `l` a Gamma index and `j` an order. Weights are `(sigma, rho)`
//! pairs, evaluated exactly. The top-line classifier works on a finite window and says
//! so through a `tentative` flag.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_traits::{One, Signed};
use serde::Serialize;

use crate::arith::{fmt_rational, int, rational_to_f64, Rational};
use crate::error::{pre, Result};
use crate::gform::{check_aqk, Hcp, HcpSeries};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct NewtonPoint {
    pub l: u32,
    pub j: i64,
    #[serde(rename = "containsAi")]
    pub contains_ai: bool,
}

/// `E(P)` with per-point flags, plus the window it was read from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NewtonData {
    /// Sorted by order descending, then Gamma index ascending.
    pub points: Vec<NewtonPoint>,
    pub top: Option<i64>,
    pub floor: Option<i64>,
}

impl NewtonData {
    pub fn contains(&self, l: u32, j: i64) -> bool {
        self.points.iter().any(|p| p.l == l && p.j == j)
    }

    pub fn point(&self, l: u32, j: i64) -> Option<&NewtonPoint> {
        self.points.iter().find(|p| p.l == l && p.j == j)
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `Sdeg_A` per order present in the window.
    pub fn sdeg_by_order(&self) -> BTreeMap<i64, u32> {
        let mut m = BTreeMap::new();
        for p in &self.points {
            let e = m.entry(p.j).or_insert(p.l);
            *e = (*e).max(p.l);
        }
        m
    }

    /// Convex hull of the points, counter-clockwise from the lowest-leftmost vertex.
    pub fn hull(&self) -> Vec<(u32, i64)> {
        convex_hull(&self.points.iter().map(|p| (p.l, p.j)).collect::<Vec<_>>())
    }
}

pub fn e_set(p: &HcpSeries) -> NewtonData {
    let mut points = Vec::new();
    for (j, h) in p.components().rev() {
        let mut by_l: BTreeMap<u32, bool> = BTreeMap::new();
        for (l, i) in h.gamma().keys() {
            let e = by_l.entry(*l).or_insert(false);
            *e |= *i > 0;
        }
        for (l, a) in by_l {
            points.push(NewtonPoint { l, j: *j, contains_ai: a });
        }
    }
    NewtonData { points, top: p.top(), floor: p.floor() }
}

fn cross(o: (i128, i128), a: (i128, i128), b: (i128, i128)) -> i128 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

pub fn convex_hull(pts: &[(u32, i64)]) -> Vec<(u32, i64)> {
    let mut v: Vec<(i128, i128)> = pts.iter().map(|(l, j)| (*l as i128, *j as i128)).collect();
    v.sort_by_key(|a| (a.1, a.0));
    v.dedup();
    if v.len() < 3 {
        return v.iter().map(|(x, y)| (*x as u32, *y as i64)).collect();
    }
    // Andrew's monotone chain, sorted by (y, x).
    let mut lower: Vec<(i128, i128)> = Vec::new();
    for &p in &v {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<(i128, i128)> = Vec::new();
    for &p in v.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower.iter().map(|(x, y)| (*x as u32, *y as i64)).collect()
}

// ---------------------------------------------------------------------------

/// A weight `(sigma, rho)` with `sigma >= 0`, `rho > 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Weight {
    sigma: Rational,
    rho: Rational,
}

impl Weight {
    pub fn new(sigma: Rational, rho: Rational) -> Result<Self> {
        if sigma.is_negative() {
            return pre(format!("weight sigma = {} must be >= 0", sigma));
        }
        if !rho.is_positive() {
            return pre(format!("weight rho = {} must be > 0", rho));
        }
        Ok(Weight { sigma, rho })
    }

    /// `(sigma, 1)`.
    pub fn unit(sigma: Rational) -> Result<Self> {
        Self::new(sigma, Rational::one())
    }

    pub fn sigma(&self) -> &Rational {
        &self.sigma
    }

    pub fn rho(&self) -> &Rational {
        &self.rho
    }

    pub fn normalized(&self) -> Weight {
        Weight { sigma: &self.sigma / &self.rho, rho: Rational::one() }
    }

    pub fn eval(&self, l: u32, j: i64) -> Rational {
        &self.sigma * int(l as i64) + &self.rho * int(j)
    }
}

/// `v_{sigma,rho}` as far as the window can tell.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum WeightValue {
    Finite(Rational),
    NegInfinity,
    /// The window supremum; points below the window might exceed it.
    LowerBound(Option<Rational>),
}

impl WeightValue {
    pub fn finite(&self) -> Option<&Rational> {
        match self {
            WeightValue::Finite(v) => Some(v),
            _ => None,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            WeightValue::Finite(v) => serde_json::json!({"kind": "finite", "value": fmt_rational(v)}),
            WeightValue::NegInfinity => serde_json::json!({"kind": "-inf"}),
            WeightValue::LowerBound(v) => {
                serde_json::json!({"kind": "lower-bound", "value": v.as_ref().map(fmt_rational)})
            }
        }
    }
}

fn window_sup(d: &NewtonData, w: &Weight) -> Option<Rational> {
    d.points.iter().map(|p| w.eval(p.l, p.j)).max()
}

pub fn weight_of(p: &HcpSeries, w: &Weight) -> WeightValue {
    let d = e_set(p);
    let sup = window_sup(&d, w);
    let Some(f) = p.floor() else {
        return match sup {
            Some(v) => WeightValue::Finite(v),
            None => WeightValue::NegInfinity,
        };
    };
    // Below the window, condition A_q(0) bounds Sdeg_A(P_{p-i}) by i - 1.
    let (Some(top), Some(v)) = (p.top(), sup.clone()) else {
        return WeightValue::LowerBound(sup);
    };
    if w.sigma > w.rho || !check_aqk(p, 0).holds {
        return WeightValue::LowerBound(Some(v));
    }
    let below = &w.sigma * int((top - f).max(0)) + &w.rho * int(f - 1);
    if v >= below {
        WeightValue::Finite(v)
    } else {
        WeightValue::LowerBound(Some(v))
    }
}

/// `E(H, sigma, rho)` within the window.
pub fn top_points(p: &HcpSeries, w: &Weight) -> Vec<(u32, i64)> {
    let d = e_set(p);
    let Some(v) = window_sup(&d, w) else { return Vec::new() };
    d.points.iter().filter(|q| w.eval(q.l, q.j) == v).map(|q| (q.l, q.j)).collect()
}

/// `f_{sigma,rho}`: the monomials on the top line; zero when the window has no point.
pub fn top_term(p: &HcpSeries, w: &Weight) -> HcpSeries {
    let pts = top_points(p, w);
    filter_gamma(p, None, |l, j| pts.contains(&(l, j)))
}

fn filter_gamma(p: &HcpSeries, floor: Option<i64>, keep: impl Fn(u32, i64) -> bool) -> HcpSeries {
    let mut comps = Vec::new();
    for (j, h) in p.components() {
        let mut out = Hcp::zero(p.k(), *j).expect("orders are nonnegative");
        for ((l, i), c) in h.gamma() {
            if keep(*l, *j) {
                out = out.with_gamma(*l, *i, c.clone());
            }
        }
        comps.push(out);
    }
    HcpSeries::from_parts(p.k(), floor, comps).expect("same context")
}

/// `H_d`: Gamma monomials with `sigma*l + rho*j >= d`.
pub fn filtration_h(p: &HcpSeries, d: &Rational, w: &Weight) -> HcpSeries {
    filter_gamma(p, p.floor(), |l, j| &w.eval(l, j) >= d)
}

/// `HS_d^m`: as `H_d`, also requiring `l <= m`. A-indices are kept.
pub fn filtration_hs(p: &HcpSeries, d: &Rational, m: i64, w: &Weight) -> HcpSeries {
    filter_gamma(p, p.floor(), |l, j| (l as i64) <= m && &w.eval(l, j) >= d)
}

/// `Edg_u(P)` over the window, from the top order down.
pub fn up_edge(p: &HcpSeries) -> Vec<(u32, i64)> {
    let mut best: Option<u32> = None;
    let mut out = Vec::new();
    for (j, h) in p.components().rev() {
        if let Some(a) = h.sdeg_a() {
            if best.is_none_or(|b| a > b) {
                out.push((a, *j));
                best = Some(a);
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TopLine {
    SdegZero,
    Restriction { sigma: Rational, vertices: Vec<(u32, i64)> },
    Asymptotic { sigma0: Rational },
    Undetermined,
}

impl TopLine {
    pub fn name(&self) -> &'static str {
        match self {
            TopLine::SdegZero => "SdegZero",
            TopLine::Restriction { .. } => "Restriction",
            TopLine::Asymptotic { .. } => "Asymptotic",
            TopLine::Undetermined => "Undetermined",
        }
    }

    pub fn sigma(&self) -> Option<&Rational> {
        match self {
            TopLine::Restriction { sigma, .. } => Some(sigma),
            TopLine::Asymptotic { sigma0 } => Some(sigma0),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TopLineClass {
    pub line: TopLine,
    pub tentative: bool,
    /// `min (p - j)/l` over window points with `l > 0`.
    pub sigma_observed: Option<Rational>,
}

impl TopLineClass {
    pub fn to_json(&self) -> serde_json::Value {
        let mut v = serde_json::json!({
            "kind": self.line.name(),
            "tentative": self.tentative,
            "sigma": self.line.sigma().map(fmt_rational),
            "sigmaObserved": self.sigma_observed.as_ref().map(fmt_rational),
        });
        if let TopLine::Restriction { vertices, .. } = &self.line {
            v["vertices"] = serde_json::json!(vertices);
        }
        v
    }
}

/// Top-line classification; requires condition A_q(0).
pub fn classify_top_line(p: &HcpSeries) -> Result<TopLineClass> {
    let c = check_aqk(p, 0);
    if !c.holds {
        let w = c.witness.unwrap();
        return pre(format!("condition A_q(0) fails (clause {} at order {}): {}", w.clause, w.order, w.detail));
    }
    Ok(classify_unchecked(p))
}

/// The classification rule without the A_q(0) precondition.
pub fn classify_unchecked(p: &HcpSeries) -> TopLineClass {
    let undetermined = TopLineClass { line: TopLine::Undetermined, tentative: true, sigma_observed: None };
    let Some(top) = p.top() else { return undetermined };
    if p.floor().is_some_and(|f| f >= top) {
        return undetermined;
    }
    let d = e_set(p);
    let sdeg: Vec<(i64, u32)> = d.sdeg_by_order().into_iter().rev().filter(|(j, l)| *l > 0 && *j < top).collect();
    let exact = p.is_exact();
    if sdeg.is_empty() {
        return TopLineClass { line: TopLine::SdegZero, tentative: !exact, sigma_observed: None };
    }
    let ratio = |j: i64, l: u32| Rational::new((top - j).into(), (l as i64).into());
    let sigma = sdeg.iter().map(|(j, l)| ratio(*j, *l)).min().unwrap();
    let mut vertices = vec![(0, top)];
    vertices.extend(d.points.iter().filter(|q| q.l > 0 && ratio(q.j, q.l) == sigma).map(|q| (q.l, q.j)));
    let restriction = |tentative: bool| TopLineClass {
        line: TopLine::Restriction { sigma: sigma.clone(), vertices: vertices.clone() },
        tentative,
        sigma_observed: Some(sigma.clone()),
    };
    if exact || sigma <= Rational::one() {
        return restriction(false);
    }
    if sdeg.len() >= 2 {
        let n = sdeg.len();
        let ratios: Vec<Rational> = sdeg.iter().map(|(j, l)| ratio(*j, *l)).collect();
        let unique_deepest = ratios[..n - 1].iter().all(|r| *r > ratios[n - 1]);
        if unique_deepest && ratios[n - 1] < ratios[n - 2] {
            let (j1, l1) = sdeg[n - 2];
            let (j2, l2) = sdeg[n - 1];
            let alpha = Rational::new((l2 as i64 - l1 as i64).into(), (j1 - j2).into());
            let extrapolated = if alpha.is_positive() { alpha.recip().max(Rational::one()) } else { Rational::one() };
            return TopLineClass {
                line: TopLine::Asymptotic { sigma0: sigma.clone().min(extrapolated) },
                tentative: true,
                sigma_observed: Some(sigma),
            };
        }
    }
    restriction(true)
}

// ---------------------------------------------------------------------------

pub fn report_json(p: &HcpSeries, class: &TopLineClass) -> serde_json::Value {
    let d = e_set(p);
    serde_json::json!({
        "points": d.points,
        "upEdge": up_edge(p),
        "hull": d.hull(),
        "window": {"top": d.top, "floor": d.floor},
        "classification": class.to_json(),
        "tentative": class.tentative,
        "sigma": class.line.sigma().map(fmt_rational),
    })
}

/// Deterministic SVG drawing: axes Sdeg_A / ord, hull, red up-edge, dashed top line.
pub fn render_svg(p: &HcpSeries, class: &TopLineClass) -> String {
    const W: f64 = 480.0;
    const H: f64 = 400.0;
    const M: f64 = 50.0;
    let d = e_set(p);
    let top = d.top.unwrap_or(0);
    let ymin = d.floor.unwrap_or_else(|| d.points.iter().map(|q| q.j).min().unwrap_or(0)).min(0);
    let xmax = d.points.iter().map(|q| q.l as i64).max().unwrap_or(0).max(1) + 1;
    let ymax = top.max(ymin + 1) + 1;
    let sx = (W - 2.0 * M) / xmax as f64;
    let sy = (H - 2.0 * M) / (ymax - ymin) as f64;
    let px = |x: f64| M + x * sx;
    let py = |y: f64| H - M - (y - ymin as f64) * sy;
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let (ox, oy) = (px(0.0), py(ymin as f64));
    let _ = writeln!(
        s,
        r#"<line x1="{ox:.2}" y1="{oy:.2}" x2="{:.2}" y2="{oy:.2}" stroke="black" stroke-width="1.5"/>"#,
        W - M / 2.0
    );
    let _ = writeln!(
        s,
        r#"<line x1="{ox:.2}" y1="{oy:.2}" x2="{ox:.2}" y2="{:.2}" stroke="black" stroke-width="1.5"/>"#,
        M / 2.0
    );
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" font-size="14">Sdeg_A</text>"#, W - M - 10.0, oy + 30.0);
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" font-size="14">ord</text>"#, ox - 40.0, M / 2.0);
    for x in 0..=xmax {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="10" text-anchor="middle">{x}</text>"#,
            px(x as f64),
            oy + 14.0
        );
    }
    for y in ymin..=ymax {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="10" text-anchor="end">{y}</text>"#,
            ox - 6.0,
            py(y as f64) + 3.0
        );
    }
    let hull = d.hull();
    if hull.len() >= 2 {
        let pts: Vec<String> = hull.iter().map(|(l, j)| format!("{:.2},{:.2}", px(*l as f64), py(*j as f64))).collect();
        let _ =
            writeln!(s, r##"<polygon points="{}" fill="#dde6f0" stroke="#6080a0" stroke-width="1"/>"##, pts.join(" "));
    }
    let edge = up_edge(p);
    if let Some(&(a0, b0)) = edge.first() {
        let mut path = format!("M {:.2} {:.2} L {:.2} {:.2}", px(0.0), py(b0 as f64), px(a0 as f64), py(b0 as f64));
        for w in edge.windows(2) {
            let (a, _) = w[0];
            let (a2, b2) = w[1];
            let _ =
                write!(path, " L {:.2} {:.2} L {:.2} {:.2}", px(a as f64), py(b2 as f64), px(a2 as f64), py(b2 as f64));
        }
        let (al, _) = *edge.last().unwrap();
        let _ = write!(path, " L {:.2} {:.2}", px(al as f64), py(ymin as f64));
        let _ = writeln!(s, r#"<path d="{path}" fill="none" stroke="red" stroke-width="2"/>"#);
    }
    if let Some(sig) = class.line.sigma() {
        // sigma*X + Y = top, from (0, top) down to the bottom of the plot.
        let xend = rational_to_f64(&(Rational::from_integer((top - ymin).into()) / sig));
        let (xe, ye) = if xend > xmax as f64 {
            (xmax as f64, top as f64 - rational_to_f64(sig) * xmax as f64)
        } else {
            (xend, ymin as f64)
        };
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black" stroke-dasharray="6,4" stroke-width="1"/>"#,
            px(0.0),
            py(top as f64),
            px(xe),
            py(ye)
        );
    }
    for q in &d.points {
        let fill = if q.contains_ai { "white" } else { "black" };
        let _ = writeln!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="{fill}" stroke="black"/>"#,
            px(q.l as f64),
            py(q.j as f64)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" font-size="12">{}{}</text>"#,
        M,
        M / 2.0 - 5.0,
        class.line.name(),
        if class.tentative { " (tentative)" } else { "" }
    );
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{rat, CycloScalar};
    use proptest::prelude::*;

    fn one(k: u32) -> CycloScalar {
        CycloScalar::one(k)
    }

    /// Exact series from `(l, i, j)` unit monomials.
    fn series(k: u32, floor: Option<i64>, monos: &[(u32, u32, i64)]) -> HcpSeries {
        let comps = monos.iter().map(|(l, i, j)| Hcp::monomial(k, *l, *i, *j, one(k)).unwrap()).collect();
        HcpSeries::from_parts(k, floor, comps).unwrap()
    }

    fn w11() -> Weight {
        Weight::unit(rat(1, 1)).unwrap()
    }

    #[test]
    fn e_set_examples() {
        let p = series(2, None, &[(0, 0, 5)]);
        assert_eq!(e_set(&p).points, vec![NewtonPoint { l: 0, j: 5, contains_ai: false }]);
        let p = series(2, None, &[(0, 0, 5), (2, 0, 3), (1, 1, 3)]);
        let d = e_set(&p);
        assert_eq!(d.points.len(), 3);
        assert!(d.point(1, 3).unwrap().contains_ai);
        assert!(!d.point(2, 3).unwrap().contains_ai);
        let b = Hcp::zero(2, 2).unwrap().with_b(1, one(2));
        let p = HcpSeries::from_parts(2, None, vec![Hcp::d_pow(2, 5).unwrap(), b]).unwrap();
        assert_eq!(e_set(&p).points.len(), 1);
    }

    #[test]
    fn weights() {
        assert!(Weight::new(rat(-1, 1), rat(1, 1)).is_err());
        assert!(Weight::new(rat(1, 1), rat(0, 1)).is_err());
        assert_eq!(Weight::new(rat(1, 1), rat(2, 1)).unwrap().normalized().sigma(), &rat(1, 2));
        let p = series(2, None, &[(0, 0, 5), (2, 0, 3)]);
        assert_eq!(weight_of(&p, &w11()), WeightValue::Finite(rat(5, 1)));
        assert_eq!(top_term(&p, &w11()), p);
        let p5 = series(2, None, &[(0, 0, 5)]);
        let w = Weight::new(rat(3, 2), rat(2, 1)).unwrap();
        assert_eq!(weight_of(&p5, &w), WeightValue::Finite(rat(10, 1)));
        assert_eq!(top_term(&p5, &w), p5);
        assert_eq!(weight_of(&HcpSeries::zero(2), &w), WeightValue::NegInfinity);
        assert!(top_term(&HcpSeries::zero(2), &w).is_zero());
    }

    #[test]
    fn truncated_weights() {
        // A_q(0) pattern truncated at order 1: (1,1)-weight is pinned to p.
        let p = series(2, Some(1), &[(0, 0, 5), (0, 0, 4), (1, 0, 3), (2, 0, 2), (3, 0, 1)]);
        assert!(check_aqk(&p, 0).holds);
        assert_eq!(weight_of(&p, &w11()), WeightValue::Finite(rat(5, 1)));
        let steep = Weight::unit(rat(2, 1)).unwrap();
        assert!(matches!(weight_of(&p, &steep), WeightValue::LowerBound(_)));
        let shallow = Weight::unit(rat(1, 2)).unwrap();
        assert_eq!(weight_of(&p, &shallow), WeightValue::Finite(rat(5, 1)));
    }

    #[test]
    fn up_edge_examples() {
        assert_eq!(up_edge(&series(2, None, &[(0, 0, 5), (2, 0, 3)])), vec![(0, 5), (2, 3)]);
        assert_eq!(up_edge(&series(2, None, &[(0, 0, 5)])), vec![(0, 5)]);
        assert_eq!(up_edge(&series(2, None, &[(0, 0, 5), (1, 0, 4), (1, 0, 3)])), vec![(0, 5), (1, 4)]);
    }

    #[test]
    fn classify_examples() {
        let p = series(2, None, &[(0, 0, 5), (2, 0, 3)]);
        assert!(classify_top_line(&p).is_err());
        let c = classify_unchecked(&p);
        assert_eq!(c.line, TopLine::Restriction { sigma: rat(1, 1), vertices: vec![(0, 5), (2, 3)] });
        assert!(!c.tentative);
        let c = classify_top_line(&series(2, None, &[(0, 0, 5)])).unwrap();
        assert_eq!(c.line, TopLine::SdegZero);
        assert!(!c.tentative);
        // Sdeg_A(P_{p-i}) = i - 1 on a window of 6 orders below the top.
        let monos: Vec<(u32, u32, i64)> =
            std::iter::once((0, 0, 8)).chain((1..=6).map(|i| (i as u32 - 1, 0, 8 - i))).collect();
        let p = series(2, Some(2), &monos);
        let c = classify_top_line(&p).unwrap();
        assert_eq!(c.line, TopLine::Asymptotic { sigma0: rat(1, 1) });
        assert!(c.tentative);
        assert_eq!(c.sigma_observed, Some(rat(6, 5)));
        // Only the top order known.
        let p = series(2, Some(5), &[(0, 0, 5)]);
        assert_eq!(classify_top_line(&p).unwrap().line, TopLine::Undetermined);
        // A single deeper point gives a tentative restriction.
        let p = series(2, Some(0), &[(0, 0, 3), (1, 0, 0)]);
        let c = classify_top_line(&p).unwrap();
        assert_eq!(c.line, TopLine::Restriction { sigma: rat(3, 1), vertices: vec![(0, 3), (1, 0)] });
        assert!(c.tentative);
    }

    #[test]
    fn filtrations() {
        let a = series(2, None, &[(0, 0, 5), (2, 0, 3)]);
        assert!(filtration_h(&a, &rat(6, 1), &w11()).is_zero());
        let b = series(2, None, &[(0, 0, 5), (2, 0, 3), (1, 0, 3)]);
        assert_eq!(filtration_h(&b, &rat(5, 1), &w11()), a);
        assert_eq!(filtration_h(&b, &rat(-100, 1), &w11()), b);
        let d5 = series(2, None, &[(0, 0, 5)]);
        assert_eq!(filtration_hs(&a, &rat(5, 1), 0, &w11()), d5);
        assert_eq!(filtration_hs(&a, &rat(5, 1), 2, &w11()), a);
        assert_eq!(filtration_hs(&a, &rat(5, 1), 1, &w11()), d5);
        let withai = series(2, None, &[(0, 0, 5), (1, 1, 4)]);
        assert_eq!(filtration_hs(&withai, &rat(5, 1), 1, &w11()), withai);
    }

    #[test]
    fn hull_and_svg() {
        let p = series(2, None, &[(0, 0, 5), (2, 0, 3), (1, 0, 3), (3, 0, 0), (0, 0, 0)]);
        let hull = e_set(&p).hull();
        assert_eq!(hull, vec![(0, 0), (3, 0), (2, 3), (0, 5)]);
        let c = classify_unchecked(&p);
        let svg = render_svg(&p, &c);
        assert_eq!(svg, render_svg(&p, &c));
        assert!(svg.contains("stroke=\"red\"") && svg.contains("stroke-dasharray"));
        assert!(svg.contains("Sdeg_A") && svg.contains(">ord<"));
        let j = report_json(&p, &c);
        assert_eq!(j["upEdge"], serde_json::json!([[0, 5], [2, 3], [3, 0]]));
        assert_eq!(j["classification"]["kind"], "Restriction");
    }

    fn arb_series() -> impl Strategy<Value = HcpSeries> {
        prop::collection::vec((0u32..5, 0u32..3, 0i64..7, -3i64..4), 1..10).prop_map(|ms| {
            let comps = ms
                .into_iter()
                .filter(|m| m.3 != 0)
                .map(|(l, i, j, c)| Hcp::monomial(3, l, i, j, CycloScalar::from_int(3, c)).unwrap())
                .collect();
            HcpSeries::from_parts(3, None, comps).unwrap()
        })
    }

    fn arb_weight() -> impl Strategy<Value = Weight> {
        (0i64..4, 1i64..3).prop_map(|(s, r)| Weight::new(rat(s, 2), rat(r, 1)).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        #[test]
        fn up_edge_is_staircase(p in arb_series()) {
            let e = up_edge(&p);
            for w in e.windows(2) {
                prop_assert!(w[0].0 < w[1].0 && w[0].1 > w[1].1);
            }
            let d = e_set(&p);
            for (a, b) in &e {
                prop_assert!(d.contains(*a, *b));
                prop_assert!(d.points.iter().all(|q| q.j <= *b || q.l < *a));
            }
        }

        #[test]
        fn hull_contains_points(p in arb_series()) {
            let d = e_set(&p);
            let h: Vec<(i128, i128)> = d.hull().iter().map(|(x, y)| (*x as i128, *y as i128)).collect();
            if h.len() >= 3 {
                for q in &d.points {
                    let pt = (q.l as i128, q.j as i128);
                    for i in 0..h.len() {
                        prop_assert!(cross(h[i], h[(i + 1) % h.len()], pt) >= 0);
                    }
                }
            }
        }

        #[test]
        fn top_term_lies_on_line(p in arb_series(), w in arb_weight()) {
            let f = top_term(&p, &w);
            match weight_of(&p, &w) {
                WeightValue::Finite(v) => {
                    prop_assert!(!f.is_zero());
                    prop_assert_eq!(weight_of(&f, &w), WeightValue::Finite(v.clone()));
                    for q in e_set(&f).points {
                        prop_assert_eq!(w.eval(q.l, q.j), v.clone());
                    }
                    prop_assert!(filtration_h(&p, &(v.clone() + rat(1, 7)), &w).is_zero());
                    prop_assert_eq!(filtration_h(&p, &v, &w), f);
                }
                other => prop_assert_eq!(other, WeightValue::NegInfinity),
            }
        }

        #[test]
        fn normalization_preserves_top_points(p in arb_series(), w in arb_weight()) {
            prop_assert_eq!(top_points(&p, &w), top_points(&p, &w.normalized()));
        }
    }
}
