//! Standard form of `(D + L)^k` in a free associative algebra.
//!
//! A word `L^(t1)...L^(tm) D^l` is stored as `(vec![t1, .., tm], l)`, where
//! `L^(t) = (ad D)^t (L)`. The closed form uses the coefficient function `g`;
//! the oracle rewrites `D L^(t) -> L^(t) D + L^(t+1)` until no `D` precedes an `L`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Mutex, OnceLock};

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::arith::{binom, fmt_rational, Rational};
use crate::diffop::GradedOp;
use crate::error::{pre, Result};
use crate::gform::HcpSeries;

/// Largest `k` the rewriting oracle accepts by default.
pub const ORACLE_CAP: u32 = 8;

pub type Word = (Vec<u32>, u32);

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StdFormExpansion {
    terms: BTreeMap<Word, Rational>,
}

impl StdFormExpansion {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_term(&mut self, derivs: Vec<u32>, dpow: u32, c: Rational) {
        let key = (derivs, dpow);
        let v = self.terms.remove(&key).unwrap_or_else(Rational::zero) + c;
        if !v.is_zero() {
            self.terms.insert(key, v);
        }
    }

    pub fn terms(&self) -> &BTreeMap<Word, Rational> {
        &self.terms
    }

    pub fn coeff(&self, derivs: &[u32], dpow: u32) -> Rational {
        self.terms.get(&(derivs.to_vec(), dpow)).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms ordered by `D` power descending, then words lexicographically.
    pub fn sorted_terms(&self) -> Vec<(&Word, &Rational)> {
        let mut v: Vec<_> = self.terms.iter().collect();
        v.sort_by(|a, b| {
            b.0 .1.cmp(&a.0 .1).then_with(|| a.0 .0.len().cmp(&b.0 .0.len())).then_with(|| a.0 .0.cmp(&b.0 .0))
        });
        v
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::Value::Array(
            self.sorted_terms()
                .into_iter()
                .map(|((t, l), c)| serde_json::json!({"derivs": t, "dpow": l, "coeff": fmt_rational(c)}))
                .collect(),
        )
    }
}

impl fmt::Display for StdFormExpansion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms = self.sorted_terms();
        if terms.is_empty() {
            return write!(f, "0");
        }
        for (n, ((t, l), c)) in terms.into_iter().enumerate() {
            let neg = c < &Rational::zero();
            let a = if neg { -c.clone() } else { c.clone() };
            if n == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, "{}", if neg { " - " } else { " + " })?;
            }
            let mut parts = Vec::new();
            if !a.is_one() || (t.is_empty() && *l == 0) {
                parts.push(fmt_rational(&a));
            }
            if !t.is_empty() {
                parts.push(format!("L({})", t.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")));
            }
            match l {
                0 => {}
                1 => parts.push("D".into()),
                _ => parts.push(format!("D^{}", l)),
            }
            write!(f, "{}", parts.join("*"))?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------

fn g_memo() -> &'static Mutex<HashMap<Vec<i64>, BigUint>> {
    static MEMO: OnceLock<Mutex<HashMap<Vec<i64>, BigUint>>> = OnceLock::new();
    MEMO.get_or_init(|| Mutex::new(HashMap::new()))
}

/// The coefficient function `g(t1, .., tm)`; zero when some entry is negative.
pub fn g_value(t: &[i64]) -> BigUint {
    if t.iter().any(|x| *x < 0) {
        return BigUint::zero();
    }
    if t.len() <= 1 || t.iter().all(|x| *x == 0) {
        return BigUint::one();
    }
    if let Some(v) = g_memo().lock().unwrap().get(t) {
        return v.clone();
    }
    let mut acc = BigUint::zero();
    let start = if t[0] == 0 {
        acc += g_value(&t[1..]);
        1
    } else {
        0
    };
    let mut s = t.to_vec();
    for i in start..t.len() {
        s[i] -= 1;
        acc += g_value(&s);
        s[i] += 1;
    }
    g_memo().lock().unwrap().insert(t.to_vec(), acc.clone());
    acc
}

/// Compositions of `total` into `parts` nonnegative integers, lexicographic order.
pub fn compositions(total: u32, parts: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    if parts == 0 {
        if total == 0 {
            out.push(Vec::new());
        }
        return out;
    }
    let mut cur = Vec::with_capacity(parts as usize);
    fn rec(total: u32, parts: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if parts == 1 {
            cur.push(total);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for a in 0..=total {
            cur.push(a);
            rec(total - a, parts - 1, cur, out);
            cur.pop();
        }
    }
    rec(total, parts, &mut cur, &mut out);
    out
}

/// `T_{i,j,k}` as a sum of `L`-words (no `D` factor).
pub fn t_block(i: u32, j: u32, k: u32) -> Result<StdFormExpansion> {
    if i < 1 || i > k || j >= i {
        return pre(format!("T_{{{},{},{}}} needs 1 <= i <= k and j < i", i, j, k));
    }
    let b = Rational::from_integer(binom(k as i64, i as i64));
    let mut e = StdFormExpansion::new();
    for t in compositions(j, i - j) {
        let tt: Vec<i64> = t.iter().map(|x| *x as i64).collect();
        let g = Rational::from_integer(g_value(&tt).into());
        e.add_term(t, 0, &b * g);
    }
    Ok(e)
}

pub fn expand_power(k: u32) -> Result<StdFormExpansion> {
    if k == 0 {
        return pre("expand_power needs k >= 1");
    }
    let mut e = StdFormExpansion::new();
    e.add_term(Vec::new(), k, Rational::one());
    for i in 1..=k {
        for j in 0..i {
            for ((t, _), c) in t_block(i, j, k)?.terms {
                e.add_term(t, k - i, c);
            }
        }
    }
    Ok(e)
}

// ---------------------------------------------------------------------------

/// Letters of the free algebra: `None` is `D`, `Some(t)` is `L^(t)`.
type Letter = Option<u32>;

pub fn expand_power_oracle(k: u32) -> Result<StdFormExpansion> {
    expand_power_oracle_capped(k, ORACLE_CAP)
}

pub fn expand_power_oracle_capped(k: u32, cap: u32) -> Result<StdFormExpansion> {
    if k == 0 {
        return pre("expand_power_oracle needs k >= 1");
    }
    if k > cap {
        return pre(format!("oracle cap exceeded: k = {} > {}", k, cap));
    }
    // All 2^k words of (D + L)^k.
    let mut work: BTreeMap<Vec<Letter>, i64> = BTreeMap::new();
    work.insert(Vec::new(), 1);
    for _ in 0..k {
        let mut next = BTreeMap::new();
        for (w, c) in work {
            for letter in [None, Some(0)] {
                let mut w2 = w.clone();
                w2.push(letter);
                *next.entry(w2).or_insert(0) += c;
            }
        }
        work = next;
    }
    let mut done: BTreeMap<Vec<Letter>, i64> = BTreeMap::new();
    let mut stack: Vec<(Vec<Letter>, i64)> = work.into_iter().collect();
    while let Some((w, c)) = stack.pop() {
        // First D immediately followed by an L.
        match w.windows(2).position(|p| p[0].is_none() && p[1].is_some()) {
            None => *done.entry(w).or_insert(0) += c,
            Some(pos) => {
                let t = w[pos + 1].unwrap();
                let mut swapped = w.clone();
                swapped.swap(pos, pos + 1);
                let mut merged = w.clone();
                merged.splice(pos..pos + 2, [Some(t + 1)]);
                stack.push((swapped, c));
                stack.push((merged, c));
            }
        }
    }
    let mut e = StdFormExpansion::new();
    for (w, c) in done {
        if c == 0 {
            continue;
        }
        let derivs: Vec<u32> = w.iter().filter_map(|x| *x).collect();
        let dpow = w.iter().filter(|x| x.is_none()).count() as u32;
        e.add_term(derivs, dpow, Rational::from_integer(c.into()));
    }
    Ok(e)
}

// ---------------------------------------------------------------------------

/// The ring operations `specialize` needs.
pub trait OpAlgebra: Sized + Clone {
    fn one_like(&self) -> Self;
    fn zero_like(&self) -> Self;
    fn add_op(&self, o: &Self) -> Result<Self>;
    fn sub_op(&self, o: &Self) -> Result<Self>;
    fn mul_op(&self, o: &Self) -> Result<Self>;
    fn scale_op(&self, r: &Rational) -> Self;
}

impl OpAlgebra for GradedOp {
    fn one_like(&self) -> Self {
        GradedOp::one(self.k())
    }
    fn zero_like(&self) -> Self {
        GradedOp::zero(self.k())
    }
    fn add_op(&self, o: &Self) -> Result<Self> {
        self.add(o)
    }
    fn sub_op(&self, o: &Self) -> Result<Self> {
        self.sub(o)
    }
    fn mul_op(&self, o: &Self) -> Result<Self> {
        self.mul(o)
    }
    fn scale_op(&self, r: &Rational) -> Self {
        self.scale_rational(r)
    }
}

impl OpAlgebra for HcpSeries {
    fn one_like(&self) -> Self {
        HcpSeries::one(self.k())
    }
    fn zero_like(&self) -> Self {
        HcpSeries::zero(self.k())
    }
    fn add_op(&self, o: &Self) -> Result<Self> {
        self.add(o)
    }
    fn sub_op(&self, o: &Self) -> Result<Self> {
        self.sub(o)
    }
    fn mul_op(&self, o: &Self) -> Result<Self> {
        self.mul(o)
    }
    fn scale_op(&self, r: &Rational) -> Self {
        self.scale_rational(r)
    }
}

/// Substitute concrete `D` and `L` into an expansion and evaluate.
pub fn specialize<A: OpAlgebra>(e: &StdFormExpansion, d: &A, l: &A) -> Result<A> {
    let maxt = e.terms.keys().flat_map(|(t, _)| t.iter().copied()).max().unwrap_or(0);
    let maxd = e.terms.keys().map(|(_, p)| *p).max().unwrap_or(0);
    let mut ders = vec![l.clone()];
    for _ in 0..maxt {
        let last = ders.last().unwrap();
        let next = d.mul_op(last)?.sub_op(&last.mul_op(d)?)?;
        ders.push(next);
    }
    let mut dpows = vec![d.one_like()];
    for _ in 0..maxd {
        let next = dpows.last().unwrap().mul_op(d)?;
        dpows.push(next);
    }
    let mut acc = d.zero_like();
    for ((t, p), c) in &e.terms {
        let mut w = d.one_like();
        for ti in t {
            w = w.mul_op(&ders[*ti as usize])?;
        }
        w = w.mul_op(&dpows[*p as usize])?;
        acc = acc.add_op(&w.scale_op(c))?;
    }
    Ok(acc)
}
