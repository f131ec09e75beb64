//! Standard operator pairs and random generators shared by tests, suites and the CLI.

use num_traits::{One, Zero};
use rand::Rng;

use crate::arith::{int, rat, CycloScalar, Rational};
use crate::criterion::BivarPoly;
use crate::diffop::GradedOp;
use crate::gform::{Hcp, HcpSeries};

/// Taylor coefficients `u_0..=u_deg` of the solution of `u'' = -3u^2`, `u(0) = 0`, `u'(0) = 1`.
pub fn kdv_series(deg: usize) -> Vec<Rational> {
    let mut u = vec![Rational::zero(); deg + 1];
    if deg >= 1 {
        u[1] = Rational::one();
    }
    for n in 0..deg.saturating_sub(1) {
        let conv: Rational = (0..=n).map(|a| &u[a] * &u[n - a]).sum();
        u[n + 2] = conv * int(-3) / int(((n + 2) * (n + 1)) as i64);
    }
    u
}

/// The stationary-KdV pair `(P, Q) = (d^3 + (3/2) u d + (3/4) u', d^2 + u)` with `u` known to
/// x-degree `deg`. Orders below the data are marked unknown.
pub fn kdv_pair(deg: usize) -> (GradedOp, GradedOp) {
    let u = kdv_series(deg);
    let one = |r: Rational| CycloScalar::from_rational(1, r);
    let mut qt = vec![(0u32, 2u32, one(int(1)))];
    let mut pt = vec![(0u32, 3u32, one(int(1)))];
    for (n, c) in u.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        qt.push((n as u32, 0, one(c.clone())));
        pt.push((n as u32, 1, one(c * rat(3, 2))));
        if n >= 1 {
            pt.push((n as u32 - 1, 0, one(c * int(n as i64) * rat(3, 4))));
        }
    }
    let q = GradedOp::from_monomials(1, &qt).truncate_below(-(deg as i64));
    let p = GradedOp::from_monomials(1, &pt).truncate_below(-(deg as i64 - 1));
    (p, q)
}

/// `(d^3 + x, d^2 + x)`.
pub fn generic_pair() -> (GradedOp, GradedOp) {
    let one = CycloScalar::one(1);
    (
        GradedOp::from_monomials(1, &[(0, 3, one.clone()), (1, 0, one.clone())]),
        GradedOp::from_monomials(1, &[(0, 2, one.clone()), (1, 0, one)]),
    )
}

/// Normalized `Q` operators used for the Schur contract.
pub const SCHUR_QS: [&str; 3] = ["d^2 + x", "d^2 + x^2", "d^3 + x*d + x^2"];
/// `P` operators paired with [`SCHUR_QS`].
pub const NORMAL_FORM_PS: [&str; 2] = ["d^3 + x", "d^5 + x^2*d"];

/// A synthetic A-free series with a restriction top line of slope `sigma`.
#[derive(Clone, Debug)]
pub struct SyntheticRestriction {
    pub series: HcpSeries,
    pub p: i64,
    pub q: u32,
    pub sigma: Rational,
}

pub const SYNTHETIC_SIGMAS: [(i64, i64); 4] = [(1, 2), (1, 1), (3, 2), (2, 1)];

fn small_nonzero<R: Rng>(rng: &mut R) -> Rational {
    let n = rng.gen_range(1..=4) * if rng.gen_bool(0.5) { 1 } else { -1 };
    int(n)
}

/// `D^p` plus one vertex on `sigma*l + j = p` (with `l > 0`) and a few points under the line.
pub fn synthetic_restriction<R: Rng>(rng: &mut R) -> SyntheticRestriction {
    loop {
        let (sn, sd) = SYNTHETIC_SIGMAS[rng.gen_range(0..SYNTHETIC_SIGMAS.len())];
        let sigma = rat(sn, sd);
        let p = rng.gen_range(2..=4i64);
        let q = loop {
            let q = rng.gen_range(1..=4u32);
            if q as i64 != p {
                break q;
            }
        };
        // Vertex: l0 a multiple of sd with sigma*l0 <= p.
        let choices: Vec<u32> = (1..=4u32).filter(|l| *l as i64 % sd == 0 && (*l as i64 * sn) / sd <= p).collect();
        if choices.is_empty() {
            continue;
        }
        let l0 = choices[rng.gen_range(0..choices.len())];
        let j0 = p - l0 as i64 * sn / sd;
        let mut comps = vec![
            Hcp::d_pow(1, p).unwrap(),
            Hcp::monomial(1, l0, 0, j0, CycloScalar::from_rational(1, small_nonzero(rng))).unwrap(),
        ];
        for _ in 0..rng.gen_range(0..3) {
            let l = rng.gen_range(0..=4u32);
            let j = rng.gen_range(0..p);
            if &sigma * int(l as i64) + int(j) <= int(p) {
                comps.push(Hcp::monomial(1, l, 0, j, CycloScalar::from_rational(1, small_nonzero(rng))).unwrap());
            }
        }
        let series = HcpSeries::from_parts(1, None, comps).unwrap();
        return SyntheticRestriction { series, p, q, sigma };
    }
}

/// A random nonzero `F` with at most `max_terms` terms and degrees below 3. When `type0` is
/// set, the top `(p, q)`-piece is `c (X^(q/g) - Y^(p/g))` and the other terms lie below it.
pub fn random_bivar<R: Rng>(rng: &mut R, max_terms: usize, p: i64, q: i64, type0: bool) -> BivarPoly {
    let mut f = BivarPoly::zero();
    let top = if type0 {
        let g = num_integer::gcd(p, q);
        let c = small_nonzero(rng);
        f.add_term((q / g) as u32, 0, c.clone());
        f.add_term(0, (p / g) as u32, -c);
        Some(p * q / g)
    } else {
        None
    };
    while f.is_zero() {
        for _ in 0..rng.gen_range(1..=max_terms) {
            f.add_term(rng.gen_range(0..3), rng.gen_range(0..3), small_nonzero(rng));
        }
    }
    if top.is_some() {
        for _ in 0..rng.gen_range(0..=max_terms.saturating_sub(2)) {
            let (u, v) = (rng.gen_range(0..3u32), rng.gen_range(0..3u32));
            if top.is_some_and(|n| p * (u as i64) + q * (v as i64) < n) {
                f.add_term(u, v, small_nonzero(rng));
            }
        }
    }
    f
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::newton::{classify_unchecked, TopLine};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn kdv_taylor() {
        let u = kdv_series(8);
        // u = x - x^4/4 + x^7/28 - ...
        assert_eq!(u[1], int(1));
        assert_eq!(u[4], rat(-1, 4));
        assert_eq!(u[7], rat(1, 28));
        assert!(u[2].is_zero() && u[3].is_zero() && u[5].is_zero());
    }

    #[test]
    fn kdv_commutes_in_window() {
        let (p, q) = kdv_pair(12);
        let c = p.commutator(&q).unwrap();
        assert!(c.is_zero_in_window());
        assert!(c.floor().is_some());
    }

    #[test]
    fn synthetic_is_restriction() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..40 {
            let s = synthetic_restriction(&mut rng);
            let c = classify_unchecked(&s.series);
            match c.line {
                TopLine::Restriction { sigma, .. } => assert_eq!(sigma, s.sigma),
                other => panic!("{:?}", other),
            }
            assert!(!c.tentative);
            let f = random_bivar(&mut rng, 4, s.p, s.q as i64, true);
            let top = &crate::criterion::weighted_decompose(&f, s.p, s.q as i64).unwrap()[0];
            assert!(top.coeff_sum().is_zero());
        }
    }
}
