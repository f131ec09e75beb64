//! Seeded randomized property suites over G-form series.
//!
//! Each case draws its own `ChaCha8Rng` from `seed + index`, so reports do not depend on the
//! number of worker threads.

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use crate::arith::{binom, int, rat, CycloScalar, Rational};
use crate::error::{pre, Result};
use crate::gform::{Hcp, HcpSeries};
use crate::newton::{e_set, filtration_h, filtration_hs, top_term, weight_of, Weight, WeightValue};
use crate::powerform::{expand_power, expand_power_oracle, g_value, specialize, t_block};

pub const SUITES: [&str; 3] = ["appendix", "filtration", "powerform"];

/// Slopes drawn by the suites (with `rho = 1`).
pub const SIGMAS: [(i64, i64); 4] = [(0, 1), (1, 2), (1, 1), (3, 2)];

#[derive(Clone, Debug, Default)]
pub struct SuiteReport {
    pub name: String,
    pub cases: usize,
    pub seed: u64,
    pub checks: u64,
    pub violations: Vec<String>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        json!({
            "suite": self.name,
            "cases": self.cases,
            "seed": self.seed,
            "checks": self.checks,
            "violations": self.violations,
            "passed": self.passed(),
        })
    }
}

/// Check counter for one case.
#[derive(Default)]
struct Ck {
    checks: u64,
    violations: Vec<String>,
}

impl Ck {
    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.violations.push(what());
        }
    }
}

pub fn run_suite(name: &str, cases: usize, seed: u64) -> Result<Vec<SuiteReport>> {
    match name {
        "all" => SUITES.iter().map(|s| run_suite(s, cases, seed).map(|mut v| v.remove(0))).collect(),
        "appendix" => Ok(vec![run_cases(name, cases, seed, appendix_case)]),
        "filtration" => Ok(vec![run_cases(name, cases, seed, filtration_case)]),
        "powerform" => Ok(vec![run_cases(name, cases, seed, powerform_case)]),
        other => pre(format!("unknown suite {:?} (expected appendix, filtration, powerform or all)", other)),
    }
}

fn run_cases(name: &str, cases: usize, seed: u64, f: fn(&mut ChaCha8Rng, &mut Ck) -> Result<()>) -> SuiteReport {
    let results: Vec<Ck> = (0..cases)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
            let mut ck = Ck::default();
            if let Err(e) = f(&mut rng, &mut ck) {
                ck.violations.push(format!("error: {}", e));
            }
            for v in ck.violations.iter_mut() {
                *v = format!("case {}: {}", i, v);
            }
            ck
        })
        .collect();
    let mut rep = SuiteReport { name: name.to_string(), cases, seed, ..Default::default() };
    for ck in results {
        rep.checks += ck.checks;
        rep.violations.extend(ck.violations);
    }
    rep
}

// ------------------------------------------------------------------ generators

/// Options for [`random_series`].
#[derive(Clone, Copy, Debug)]
pub struct SeriesShape {
    pub k: u32,
    pub top: i64,
    pub span: i64,
    pub max_l: u32,
    pub max_terms: usize,
    pub a_free: bool,
    pub b_terms: bool,
}

fn random_scalar<R: Rng>(rng: &mut R, k: u32) -> CycloScalar {
    loop {
        let mut c = CycloScalar::from_int(k, rng.gen_range(-3..=3));
        if k > 1 && rng.gen_bool(0.3) {
            c = &c + &CycloScalar::xi_pow(k, rng.gen_range(1..k as i64)).scale(&int(rng.gen_range(-2..=2)));
        }
        if !c.is_zero() {
            return c;
        }
    }
}

pub fn random_series<R: Rng>(rng: &mut R, s: SeriesShape) -> HcpSeries {
    loop {
        let mut comps = Vec::new();
        for _ in 0..rng.gen_range(1..=s.max_terms) {
            let j = rng.gen_range((s.top - s.span).max(0)..=s.top);
            let l = rng.gen_range(0..=s.max_l);
            let i = if s.a_free { 0 } else { rng.gen_range(0..s.k) };
            let mut h = Hcp::monomial(s.k, l, i, j, random_scalar(rng, s.k)).unwrap();
            if s.b_terms && rng.gen_bool(0.2) {
                h = h.with_b(rng.gen_range(1..=3), random_scalar(rng, s.k));
            }
            comps.push(h);
        }
        let out = HcpSeries::from_parts(s.k, None, comps).unwrap();
        if !out.is_zero() {
            return out;
        }
    }
}

fn random_weight<R: Rng>(rng: &mut R, positive: bool) -> Weight {
    let choices: Vec<_> = SIGMAS.iter().filter(|(n, _)| !positive || *n > 0).collect();
    let (n, d) = choices[rng.gen_range(0..choices.len())];
    Weight::unit(rat(*n, *d)).unwrap()
}

fn shape<R: Rng>(rng: &mut R) -> SeriesShape {
    SeriesShape {
        k: rng.gen_range(1..=4),
        top: rng.gen_range(6..=8),
        span: 6,
        max_l: 4,
        max_terms: 4,
        a_free: rng.gen_bool(0.4),
        b_terms: false,
    }
}

// ------------------------------------------------------------------ helpers

/// `v(L)` on an exact series; `None` stands for `-infinity`.
fn v(s: &HcpSeries, w: &Weight) -> Option<Rational> {
    match weight_of(s, w) {
        WeightValue::Finite(x) => Some(x),
        _ => None,
    }
}

fn add_v(a: &Option<Rational>, b: &Option<Rational>) -> Option<Rational> {
    Some(a.as_ref()? + b.as_ref()?)
}

fn le(a: &Option<Rational>, b: &Option<Rational>) -> bool {
    match (a, b) {
        (None, _) => true,
        (Some(_), None) => false,
        (Some(x), Some(y)) => x <= y,
    }
}

fn f(s: &HcpSeries, w: &Weight) -> HcpSeries {
    top_term(s, w)
}

fn contains_a(s: &HcpSeries) -> bool {
    s.components().any(|(_, h)| h.contains_a())
}

fn sdeg(s: &HcpSeries) -> Option<u32> {
    s.components().filter_map(|(_, h)| h.sdeg_a()).max()
}

fn is_pure_d_power(s: &HcpSeries, k: u32) -> bool {
    let pts: Vec<_> = s.components().collect();
    pts.len() == 1
        && pts[0].1.bpart().is_empty()
        && pts[0].1.gamma().len() == 1
        && pts[0].1.gamma().contains_key(&(0, 0))
        && pts[0].0 % k as i64 == 0
}

fn fmt_v(x: &Option<Rational>) -> String {
    x.as_ref().map_or("-inf".into(), |r| r.to_string())
}

// ------------------------------------------------------------------ appendix

fn appendix_case(rng: &mut ChaCha8Rng, ck: &mut Ck) -> Result<()> {
    let mut sh = shape(rng);
    sh.b_terms = true;
    let w = random_weight(rng, false);
    let l = random_series(rng, sh);
    sh.a_free = rng.gen_bool(0.4);
    let m = if rng.gen_bool(0.2) {
        // Occasionally a multiple of d^(ck), for the sharper commutator bound.
        HcpSeries::from_hcp(
            Hcp::d_pow(sh.k, sh.k as i64 * rng.gen_range(1..=2))?.scale(&random_scalar(rng, 1).embed(sh.k)?),
        )
    } else {
        random_series(rng, sh)
    };
    let (vl, vm) = (v(&l, &w), v(&m, &w));
    let sum = l.add(&m)?;
    let vs = v(&sum, &w);
    let tag = || format!("sigma={} L={} M={}", w.sigma(), l, m);

    // Sums.
    let mx = std::cmp::max(vl.clone(), vm.clone());
    ck.check(le(&vs, &mx), || format!("sum bound v(L+M)={} > max  {}", fmt_v(&vs), tag()));
    if vl != vm {
        ck.check(vs == mx, || format!("sum equality fails  {}", tag()));
        let want = if vl > vm { f(&l, &w) } else { f(&m, &w) };
        ck.check(f(&sum, &w) == want, || format!("sum top term f(L+M)  {}", tag()));
        let (fl, fm) = (f(&l, &w), f(&m, &w));
        if !fl.is_zero() && !fm.is_zero() {
            ck.check(f(&sum, &w) == f(&fl.add(&fm)?, &w), || format!("sum top term f(f(L)+f(M))  {}", tag()));
        }
    }
    if vl.is_some() && vl == vm && vm == vs {
        ck.check(f(&sum, &w) == f(&l, &w).add(&f(&m, &w))?, || format!("sum top term, equal weights  {}", tag()));
    }

    // H = f(H) + H2 decomposition
    if let Some(vh) = &vl {
        let h2 = l.sub(&f(&l, &w))?;
        let v2 = v(&h2, &w);
        ck.check(le(&v2, &vl) && (v2.as_ref() != Some(vh) || f(&h2, &w).is_zero()), || {
            format!("H1/H2 decomposition  {}", tag())
        });
    }

    // Two-monomial lemma on one monomial of each.
    let pick = |s: &HcpSeries, rng: &mut ChaCha8Rng| -> Option<HcpSeries> {
        let terms = s.gamma_terms();
        if terms.is_empty() {
            return None;
        }
        let (l, i, r, c) = terms[rng.gen_range(0..terms.len())].clone();
        Some(HcpSeries::from_hcp(Hcp::monomial(s.k(), l, i, r, c).ok()?))
    };
    if let (Some(a), Some(b)) = (pick(&l, rng), pick(&m, rng)) {
        let (va, vb) = (v(&a, &w), v(&b, &w));
        let ab = a.mul(&b)?;
        ck.check(v(&ab, &w) == add_v(&va, &vb), || format!("two-monomial v(LM)  {} {}", a, b));
        let comm = a.commutator(&b)?;
        let vc = v(&comm, &w);
        ck.check(le(&vc, &add_v(&va, &vb)), || format!("two-monomial v([L,M])  {} {}", a, b));
        let sharp = add_v(&va, &vb).map(|x| x - w.sigma());
        if !contains_a(&a) && !contains_a(&b) {
            ck.check(le(&vc, &sharp), || format!("two-monomial commutator drop, A-free  {} {}", a, b));
        }
        if is_pure_d_power(&a, sh.k) || is_pure_d_power(&b, sh.k) {
            ck.check(le(&vc, &sharp), || format!("two-monomial commutator drop, d^(ak) factor  {} {}", a, b));
        }
    }

    // Products.
    let lm = l.mul(&m)?;
    let vlm = v(&lm, &w);
    let (el, em) = (e_set(&l), e_set(&m));
    for pt in e_set(&lm).points {
        let ok = el.points.iter().any(|a| em.points.iter().any(|b| pt.l <= a.l + b.l && pt.j <= a.j + b.j));
        ck.check(ok, || format!("product point ({},{}) undominated  {}", pt.l, pt.j, tag()));
    }
    let bound = add_v(&vl, &vm);
    ck.check(le(&vlm, &bound), || format!("product bound v(LM)={} > {}  {}", fmt_v(&vlm), fmt_v(&bound), tag()));
    let (fl, fm) = (f(&l, &w), f(&m, &w));
    if !fl.is_zero() && !fm.is_zero() && !contains_a(&fl) && !contains_a(&fm) {
        ck.check(vlm == bound, || format!("product equality  {}", tag()));
    }
    let comm = l.commutator(&m)?;
    let vc = v(&comm, &w);
    ck.check(le(&vc, &bound), || format!("commutator bound v([L,M])  {}", tag()));
    let sharp = bound.as_ref().map(|x| x - w.sigma());
    if !contains_a(&l) && !contains_a(&m) {
        ck.check(le(&vc, &sharp), || format!("commutator drop, A-free  {}", tag()));
    }
    if is_pure_d_power(&m, sh.k) {
        ck.check(le(&vc, &sharp), || format!("commutator drop, d^(ak) factor  {}", tag()));
    }

    // f-lemmas
    let flm = f(&lm, &w);
    if vlm.is_some() && vlm == bound {
        if !flm.is_zero() {
            ck.check(v(&flm, &w) == bound, || format!("f-lemma v(f(LM))  {}", tag()));
        }
        ck.check(flm == f(&fl.mul(&fm)?, &w), || format!("f(LM) = f(f(L)f(M))  {}", tag()));
    }
    if vl.is_some() && vm.is_some() && v(&flm, &w) == bound {
        ck.check(!fl.is_zero() && !fm.is_zero() && vlm == bound, || format!("f-lemma converse  {}", tag()));
    }
    Ok(())
}

// ------------------------------------------------------------------ filtration

fn random_level<R: Rng>(rng: &mut R, around: &Option<Rational>) -> Rational {
    let base = around.clone().unwrap_or_else(|| int(6));
    base + rat(rng.gen_range(-8..=2), 2)
}

fn filtration_case(rng: &mut ChaCha8Rng, ck: &mut Ck) -> Result<()> {
    let sh = shape(rng);
    let w = random_weight(rng, false);
    let l = random_series(rng, sh);
    let mut sh2 = sh;
    sh2.a_free = rng.gen_bool(0.4);
    let m = random_series(rng, sh2);
    let (vl, vm) = (v(&l, &w), v(&m, &w));
    let h = |s: &HcpSeries, d: &Rational| filtration_h(s, d, &w);
    let hs = |s: &HcpSeries, d: &Rational, a: i64| filtration_hs(s, d, a, &w);
    let tag = || format!("sigma={} L={} M={}", w.sigma(), l, m);

    // H_d sum
    let d = random_level(rng, &vl);
    if let Some(x) = &vl {
        ck.check(h(&l, &(x + rat(1, 2))).is_zero(), || format!("H_d sum 1  {}", tag()));
    }
    ck.check(h(&l.add(&m)?, &d) == h(&l, &d).add(&h(&m, &d))?, || format!("H_d sum 2 d={}  {}", d, tag()));
    let d2 = &d - rat(rng.gen_range(1..=4), 2);
    let diff = h(&l, &d2).sub(&h(&l, &d))?;
    ck.check(le(&v(&diff, &w), &Some(d.clone())), || format!("H_d sum 3 v bound  {}", tag()));
    ck.check(h(&h(&l, &d2), &d) == h(&l, &d) && h(&h(&l, &d), &d2) == h(&l, &d), || {
        format!("H_d sum 3 nesting  {}", tag())
    });

    let lm = l.mul(&m)?;
    let ml = m.mul(&l)?;
    if let (Some(d1), Some(d2)) = (vl.clone(), vm.clone()) {
        // H_d of a product from truncated factors.
        let e1 = &d1 + rat(rng.gen_range(0..=2), 2);
        let e2 = &d2 + rat(rng.gen_range(0..=2), 2);
        let s = &e1 + &e2;
        ck.check(h(&lm, &s) == h(&h(&l, &e1).mul(&h(&m, &e2))?, &s), || format!("H_d product truncation  {}", tag()));
        // H_d of a commutator from truncated factors.
        let sig = w.sigma().clone();
        let (l1, m1) = (h(&l, &(&d1 - &sig)), h(&m, &(&d2 - &sig)));
        let target = &d1 + &d2 - &sig;
        let comm = l.commutator(&m)?;
        if !contains_a(&l1) && !contains_a(&m1) {
            ck.check(h(&comm, &target) == h(&l1.commutator(&m1)?, &target), || {
                format!("H_d commutator truncation  {}", tag())
            });
            ck.check(le(&v(&comm, &w), &Some(target.clone())), || format!("H_d commutator bound  {}", tag()));
        }
        // LM and ML agree above the commutator weight.
        if le(&v(&comm, &w), &Some(target.clone())) {
            let eps = &target + rat(1, 3);
            ck.check(h(&lm, &eps) == h(&ml, &eps), || format!("H_d LM = ML above d1+d2  {}", tag()));
            // The consequence at level d1 + d2 takes eps = sigma, so it needs sigma > 0.
            if sig > Rational::zero() {
                let top = &d1 + &d2;
                ck.check(h(&lm, &top) == h(&ml, &top), || format!("H_d LM = ML at d1+d2  {}", tag()));
            }
        }

        // Additivity.
        let a = rng.gen_range(0..=4i64);
        if d1 == d2 {
            ck.check(hs(&l, &d1, a).add(&hs(&m, &d1, a))? == hs(&l.add(&m)?, &d1, a), || {
                format!("HS additivity  {}", tag())
            });
        }
        // HS inside H_d.
        ck.check(h(&hs(&l, &d, a), &d) == hs(&l, &d, a) && hs(&h(&l, &d), &d, a) == hs(&l, &d, a), || {
            format!("HS within H_d  {}", tag())
        });
        // Sdeg_A bound: forward at level d, equivalence below every weight.
        let sd = sdeg(&l);
        if sd.is_none_or(|s| s as i64 <= a) {
            ck.check(hs(&l, &d, a) == h(&l, &d), || format!("HS Sdeg bound forward a={}  {}", a, tag()));
        }
        let low = int(-100);
        ck.check(sd.is_none_or(|s| s as i64 <= a) == (hs(&l, &low, a) == h(&l, &low)), || {
            format!("HS Sdeg bound equivalence a={}  {}", a, tag())
        });
        // HS of a product at the top Sdeg levels.
        if let (Some(a1), Some(a2)) = (sdeg(&h(&l, &d1)), sdeg(&h(&m, &d2))) {
            let (a1, a2) = (a1 as i64, a2 as i64);
            let s = &d1 + &d2;
            ck.check(hs(&lm, &s, a1 + a2) == h(&hs(&l, &d1, a1).mul(&hs(&m, &d2, a2))?, &s), || {
                format!("HS product at top Sdeg  {}", tag())
            });
        }
    }

    // HS of a product with a single-point L, sigma > 0.
    let wp = random_weight(rng, true);
    let pt = {
        let mut s1 = sh;
        s1.max_terms = 1;
        random_series(rng, s1)
    };
    let (d1, d2) = (v(&pt, &wp), v(&m, &wp));
    if let (Some(d1), Some(d2)) = (d1, d2) {
        let a1 = sdeg(&pt).unwrap() as i64;
        let minl = crate::newton::top_points(&m, &wp).iter().map(|p| p.0).min().unwrap() as i64;
        if minl >= 1 {
            let a2 = rng.gen_range(0..minl);
            let hs_m = filtration_hs(&m, &d2, a2, &wp);
            ck.check(hs_m.is_zero(), || "HS single-point setup".into());
            let prod = pt.mul(&m)?;
            ck.check(filtration_hs(&prod, &(&d1 + &d2), a1 + a2, &wp).is_zero(), || {
                format!("HS single-point product sigma={} L={} M={}", wp.sigma(), pt, m)
            });
        }
    }

    corollary_case(rng, ck)
}

/// The binomial identity for `H_{dp}((L+M)^d)`, with one of the pair equal to `d^{ak}` or both
/// A-free.
fn corollary_case(rng: &mut ChaCha8Rng, ck: &mut Ck) -> Result<()> {
    let w = random_weight(rng, true);
    let k = rng.gen_range(1..=4u32);
    let sigma = w.sigma().clone();
    let pure_power = rng.gen_bool(0.5);
    let (l, p) = if pure_power {
        let a = rng.gen_range(1..=(4 / k).max(1));
        let p = (a * k) as i64;
        (HcpSeries::d_pow(k, p)?, int(p))
    } else {
        let sh = SeriesShape { k, top: 3, span: 3, max_l: 2, max_terms: 2, a_free: true, b_terms: false };
        let l = random_series(rng, sh);
        let p = v(&l, &w).unwrap();
        (l, p)
    };
    // M: at least one point on sigma*l + j = p, the rest below.
    let mut comps = Vec::new();
    let on_line: Vec<(u32, i64)> = (0..=2u32)
        .filter_map(|ll| {
            let j = &p - &sigma * int(ll as i64);
            (j.is_integer() && j >= Rational::zero()).then(|| (ll, j.to_integer().try_into().unwrap()))
        })
        .collect();
    let (l0, j0) = on_line[rng.gen_range(0..on_line.len())];
    let idx = |rng: &mut ChaCha8Rng| if pure_power { rng.gen_range(0..k) } else { 0 };
    comps.push(Hcp::monomial(k, l0, idx(rng), j0, random_scalar(rng, k))?);
    for _ in 0..rng.gen_range(0..=1) {
        let (ll, jj) = (rng.gen_range(0..=2u32), rng.gen_range(0..=j0.max(1)));
        if &sigma * int(ll as i64) + int(jj) <= p {
            comps.push(Hcp::monomial(k, ll, idx(rng), jj, random_scalar(rng, k))?);
        }
    }
    let m = HcpSeries::from_parts(k, None, comps)?;
    if v(&m, &w).as_ref() != Some(&p) {
        return Ok(());
    }
    let tag = || format!("sigma={} L={} M={}", sigma, l, m);
    let h = |s: &HcpSeries, d: &Rational| filtration_h(s, d, &w);
    let comm = l.commutator(&m)?;
    ck.check(h(&comm, &(&p * int(2))).is_zero(), || format!("H_2p([L,M]) != 0  {}", tag()));
    let sum = l.add(&m)?;
    let mut sum_pow = HcpSeries::one(k);
    let mut lp = vec![HcpSeries::one(k)];
    let mut mp = vec![HcpSeries::one(k)];
    for d in 1..=4u32 {
        sum_pow = sum_pow.mul(&sum)?;
        lp.push(lp.last().unwrap().mul(&l)?);
        mp.push(mp.last().unwrap().mul(&m)?);
        let level = &p * int(d as i64);
        let mut rhs = HcpSeries::zero(k);
        for j in 0..=d {
            let term = h(&mp[(d - j) as usize].mul(&lp[j as usize])?, &level);
            rhs = rhs.add(&term.scale_rational(&Rational::from_integer(binom(d as i64, j as i64))))?;
        }
        ck.check(h(&sum_pow, &level) == rhs, || format!("binomial identity d={}  {}", d, tag()));
    }
    Ok(())
}

// ------------------------------------------------------------------ powerform

fn powerform_case(rng: &mut ChaCha8Rng, ck: &mut Ck) -> Result<()> {
    let kk = rng.gen_range(1..=6u32);
    let e = expand_power(kk)?;
    ck.check(e == expand_power_oracle(kk)?, || format!("expand_power({}) differs from oracle", kk));
    let t1 = t_block(1, 0, kk)?;
    ck.check(t1.len() == 1 && t1.coeff(&[0], 0) == int(kk as i64), || format!("T_(1,0,{})", kk));
    let s = rng.gen_range(1..=kk);
    let ts = t_block(s, s - 1, kk)?;
    ck.check(ts.len() == 1 && ts.coeff(&[s - 1], 0) == Rational::from_integer(binom(kk as i64, s as i64)), || {
        format!("T_({},{},{})", s, s - 1, kk)
    });
    let t: Vec<i64> = (0..rng.gen_range(1..=4)).map(|_| rng.gen_range(0..=3)).collect();
    ck.check(g_value(&t) >= num_bigint::BigUint::one(), || format!("g{:?} positive", t));

    // Specialization in the G-form algebra.
    let small =
        SeriesShape { k: rng.gen_range(1..=3), top: 2, span: 2, max_l: 2, max_terms: 2, a_free: false, b_terms: false };
    let d = random_series(rng, small);
    let l = random_series(rng, small);
    let kk = rng.gen_range(1..=3u32);
    let lhs = specialize(&expand_power(kk)?, &d, &l)?;
    ck.check(lhs == d.add(&l)?.pow(kk)?, || format!("specialize k={} D={} L={}", kk, d, l));
    Ok(())
}
