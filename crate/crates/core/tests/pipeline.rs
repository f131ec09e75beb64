//! Schur conjugation through Newton analysis on the fixture operators.

use std::collections::BTreeSet;

use odnf::diffop::GradedOp;
use odnf::fixtures::{generic_pair, kdv_pair, NORMAL_FORM_PS, SCHUR_QS};
use odnf::gform::HcpSeries;
use odnf::newton::{classify_unchecked, e_set, up_edge, weight_of, TopLine, TopLineClass, Weight, WeightValue};
use odnf::parse::{eval_graded, parse};
use odnf::schur::{normal_form, normal_form_with, Gauge, NormalFormOptions};

fn op(src: &str) -> GradedOp {
    eval_graded(&parse(src, None).unwrap(), 1, 0).unwrap()
}

fn points(s: &HcpSeries) -> BTreeSet<(u32, i64)> {
    e_set(s).points.iter().map(|p| (p.l, p.j)).collect()
}

fn class_under(p: &GradedOp, q: &GradedOp, depth: u32, gauge: Gauge) -> (TopLineClass, Vec<(u32, i64)>) {
    let mut opts = NormalFormOptions::new(depth);
    opts.gauge = gauge;
    let nf = normal_form_with(p, q, opts).unwrap();
    assert!(nf.aqk.holds);
    (classify_unchecked(&nf.series), up_edge(&nf.series))
}

#[test]
fn fixture_classification_is_gauge_invariant() {
    let (kp, kq) = kdv_pair(24);
    let (gp, gq) = generic_pair();
    for (p, q) in [(kp, kq), (gp, gq)] {
        for depth in [6, 10] {
            let base = class_under(&p, &q, depth, Gauge::Minimal);
            for seed in 1..4 {
                assert_eq!(class_under(&p, &q, depth, Gauge::Seeded(seed)), base, "depth {} seed {}", depth, seed);
            }
        }
    }
}

#[test]
fn grid_classification_up_to_tentative_asymptotics() {
    for qs in SCHUR_QS {
        for ps in NORMAL_FORM_PS {
            let (p, q) = (op(ps), op(qs));
            let (base, edge) = class_under(&p, &q, 6, Gauge::Minimal);
            for seed in 1..4 {
                let (other, other_edge) = class_under(&p, &q, 6, Gauge::Seeded(seed));
                assert_eq!(edge, other_edge, "{} / {} seed {}", ps, qs, seed);
                match (&base.line, &other.line) {
                    // The observed asymptotic slope depends on the gauge; both stay tentative.
                    (TopLine::Asymptotic { .. }, TopLine::Asymptotic { .. }) => {
                        assert!(base.tentative && other.tentative)
                    }
                    _ => assert_eq!(base, other, "{} / {} seed {}", ps, qs, seed),
                }
            }
        }
    }
}

#[test]
fn kdv_normal_form_stays_in_sdeg_zero() {
    let (p, q) = kdv_pair(20);
    let a = normal_form(&p, &q, 6).unwrap();
    let mut opts = NormalFormOptions::new(6);
    opts.gauge = Gauge::Seeded(11);
    let b = normal_form_with(&p, &q, opts).unwrap();
    for s in [&a.series, &b.series] {
        assert!(s.gamma_terms().iter().all(|(l, _, _, _)| *l == 0), "{}", s);
        assert_eq!(classify_unchecked(s).line, TopLine::SdegZero);
    }
    assert_eq!(a.series.component(3), b.series.component(3));
}

#[test]
fn normal_form_json_round_trip() {
    for qs in SCHUR_QS {
        let nf = normal_form(&op("d^5 + x^2*d"), &op(qs), 8).unwrap();
        let v = nf.to_json_value();
        assert_eq!(HcpSeries::from_json_value(&v["series"]).unwrap(), nf.series);
        assert_eq!(v["aqk"]["holds"], true);
        assert_eq!(v["gform"], nf.series.to_string());
    }
}

#[test]
fn up_edge_and_top_line_bound_the_region() {
    for qs in SCHUR_QS {
        for ps in NORMAL_FORM_PS {
            let s = normal_form(&op(ps), &op(qs), 8).unwrap().series;
            let edge = up_edge(&s);
            // Sdeg_A strictly increases going down the up-edge.
            assert!(edge.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 > w[1].1));
            let class = classify_unchecked(&s);
            if let Some(sigma) = class.line.sigma() {
                let w = Weight::unit(sigma.clone()).unwrap();
                let v = match weight_of(&s, &w) {
                    WeightValue::Finite(v) | WeightValue::LowerBound(Some(v)) => v,
                    other => panic!("weight of {}: {:?}", s, other),
                };
                for (l, j) in points(&s) {
                    assert!(w.eval(l, j) <= v);
                }
            }
        }
    }
}
