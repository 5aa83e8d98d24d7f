use num_complex::Complex64;
use proptest::prelude::*;
use rcpos::expr::{Assignment, Dims, MetricExpr, Var};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn parse(text: &str, dims: Dims) -> MetricExpr {
    MetricExpr::parse(text, dims, &[]).unwrap()
}

/// `d/dt_j` and `d/dtb_j` of a function of real coordinates by central
/// differences: `(d_x -/+ i d_y) / 2`.
fn fd_wirtinger(f: &MetricExpr, t: &[Complex64], j: usize, barred: bool, h: f64) -> Complex64 {
    let at = |d: Complex64| {
        let mut p = t.to_vec();
        p[j] += d;
        f.eval(&Assignment::conjugate_consistent(&p, &[])).unwrap()
    };
    let dx = (at(c(h, 0.0)) - at(c(-h, 0.0))) / (2.0 * h);
    let dy = (at(c(0.0, h)) - at(c(0.0, -h))) / (2.0 * h);
    let i = c(0.0, 1.0);
    if barred {
        (dx + i * dy) / 2.0
    } else {
        (dx - i * dy) / 2.0
    }
}

#[test]
fn wirtinger_derivatives_match_finite_differences() {
    let dims = Dims::new(2, 0);
    let exprs = [
        "log(1 + t1*tb1 + 2*t2*tb2)",
        "exp(t1*tb2 + t2*tb1) * (1 + t1*tb1)^-2",
        "(3 + t1 + tb1)^3 / (2 + t2*tb2)",
        "t1^2*tb2 - 0.5i*tb1*t2 + log(4 + t1*tb1*t2*tb2)",
    ];
    let t = [c(0.31, -0.2), c(-0.17, 0.44)];
    for text in exprs {
        let f = parse(text, dims);
        for j in 0..2 {
            for barred in [false, true] {
                let var = if barred {
                    Var::tb(j + 1)
                } else {
                    Var::t(j + 1)
                };
                let exact = f
                    .wirtinger(var)
                    .eval(&Assignment::conjugate_consistent(&t, &[]))
                    .unwrap();
                let approx = fd_wirtinger(&f, &t, j, barred, 1e-5);
                assert!(
                    (exact - approx).norm() < 1e-7 * exact.norm().max(1.0),
                    "{text} d/{}: {exact} vs {approx}",
                    var.name()
                );
            }
        }
    }
}

#[test]
fn complex_hessian_of_real_function_is_hermitian() {
    let dims = Dims::new(2, 1);
    let f = parse(
        "log(1 + t1*tb1 + t2*tb2) + (t1*tb2 + t2*tb1)*z1*zb1 + exp(z1*zb1)",
        dims,
    );
    let at = Assignment::conjugate_consistent(&[c(0.2, 0.1), c(-0.3, 0.25)], &[c(0.5, -0.4)]);
    let vars = [Var::t(1), Var::t(2), Var::z(1)];
    for a in vars {
        for b in vars {
            let hab = f.wirtinger(a).wirtinger(b.partner()).eval(&at).unwrap();
            let hba = f.wirtinger(b).wirtinger(a.partner()).eval(&at).unwrap();
            assert!(
                (hab - hba.conj()).norm() < 1e-13,
                "{}{}",
                a.name(),
                b.name()
            );
        }
    }
}

#[test]
fn barred_variables_are_independent_symbols() {
    let dims = Dims::new(1, 0);
    let f = parse("t1^3*tb1^2", dims);
    let d = f.wirtinger(Var::tb(1));
    let expected = parse("2*t1^3*tb1", dims);
    let at = Assignment::conjugate_consistent(&[c(0.7, -0.3)], &[]);
    assert!((d.eval(&at).unwrap() - expected.eval(&at).unwrap()).norm() < 1e-14);
    assert!(parse("t1^4", dims).wirtinger(Var::tb(1)).is_zero());
}

fn leaf() -> impl Strategy<Value = MetricExpr> {
    prop_oneof![
        (-3i32..=3).prop_map(|k| MetricExpr::real(k as f64 * 0.5)),
        (1usize..=2).prop_map(|i| MetricExpr::var(Var::t(i))),
        (1usize..=2).prop_map(|i| MetricExpr::var(Var::tb(i))),
        Just(MetricExpr::var(Var::z(1))),
        Just(MetricExpr::constant(Complex64::new(0.25, -0.75))),
    ]
}

fn tree() -> impl Strategy<Value = MetricExpr> {
    leaf().prop_recursive(4, 32, 3, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.add(&b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.mul(&b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.sub(&b)),
            (inner.clone(), -2i32..=3)
                .prop_map(|(a, k)| MetricExpr::pow(a.add(&MetricExpr::real(3.0)), k)),
            inner
                .clone()
                .prop_map(|a| MetricExpr::exp(a.scale(Complex64::new(0.1, 0.0)))),
            inner.prop_map(|a| MetricExpr::log(a.mul(&a.conjugate()).add(&MetricExpr::one()))),
        ]
    })
}

fn close(a: Complex64, b: Complex64) -> bool {
    if !(a.is_finite() && b.is_finite()) {
        return a.is_nan() == b.is_nan();
    }
    (a - b).norm() <= 1e-9 * a.norm().max(b.norm()).max(1.0)
}

proptest! {
    #[test]
    fn printed_expressions_parse_to_equal_values(e in tree(), re in -0.8f64..0.8, im in -0.8f64..0.8) {
        let dims = Dims::new(2, 1);
        let text = e.to_string();
        let back = MetricExpr::parse(&text, dims, &[]).unwrap();
        let at = Assignment::conjugate_consistent(&[c(re, im), c(im, -re)], &[c(0.3, re)]);
        match (e.eval(&at), back.eval(&at)) {
            (Ok(x), Ok(y)) => prop_assert!(close(x, y), "{text}: {x} vs {y}"),
            (Err(_), Err(_)) => {}
            (x, y) => prop_assert!(false, "{text}: {x:?} vs {y:?}"),
        }
    }

    #[test]
    fn conjugation_commutes_with_evaluation(e in tree(), re in -0.8f64..0.8, im in -0.8f64..0.8) {
        let at = Assignment::conjugate_consistent(&[c(re, im), c(0.2, -im)], &[c(-re, 0.1)]);
        if let (Ok(x), Ok(y)) = (e.eval(&at), e.conjugate().eval(&at)) {
            prop_assert!(close(x.conj(), y), "{e}: {x} vs {y}");
        }
    }

    #[test]
    fn product_rule_holds(a in tree(), b in tree(), re in -0.8f64..0.8) {
        let at = Assignment::conjugate_consistent(&[c(re, 0.3), c(-0.1, re)], &[c(0.2, 0.2)]);
        let v = Var::t(1);
        let lhs = a.mul(&b).wirtinger(v).eval(&at);
        let rhs = a.wirtinger(v).mul(&b).add(&a.mul(&b.wirtinger(v))).eval(&at);
        if let (Ok(x), Ok(y)) = (lhs, rhs) {
            prop_assert!((x - y).norm() <= 1e-8 * x.norm().max(y.norm()).max(1.0), "{x} vs {y}");
        }
    }
}
