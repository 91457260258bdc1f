use proptest::prelude::*;
use sobolev::{eval_expr, parse_expr};
use sobolev::quadrature::{
    extend_by_zero, gagliardo_seminorm, lp_norm, sobolev_norm, BoxDomain, Field, NormVariant,
    QuadratureOptions,
};

fn field(text: &str, n: usize) -> Field {
    Field::new(parse_expr(text, n).unwrap())
}

fn opts(n: usize) -> QuadratureOptions {
    QuadratureOptions::with_grid(n)
}

/// Independent evaluation of the full Gagliardo double sum on a midpoint grid.
fn brute_gagliardo_1d(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize, theta: f64, p: f64) -> f64 {
    let h = (b - a) / n as f64;
    let x: Vec<f64> = (0..n).map(|i| a + (i as f64 + 0.5) * h).collect();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                total += (f(x[i]) - f(x[j])).abs().powf(p) / (x[i] - x[j]).abs().powf(1.0 + theta * p);
            }
        }
    }
    (total * h * h).powf(1.0 / p)
}

#[test]
fn linear_function_closed_forms() {
    let u = field("x1", 1);
    let unit = BoxDomain::unit(1);
    let half = gagliardo_seminorm(&u, &unit, 0.5, 2.0, opts(512)).unwrap();
    assert!((half.value - 1.0).abs() < 0.02, "{}", half.value);
    let quarter = gagliardo_seminorm(&u, &unit, 0.25, 2.0, opts(512)).unwrap();
    assert!((quarter.value - (8.0f64 / 15.0).sqrt()).abs() < 0.02 * (8.0f64 / 15.0).sqrt());
}

#[test]
fn constants_have_zero_seminorm() {
    let r = gagliardo_seminorm(&field("3.5", 2), &BoxDomain::unit(2), 0.7, 3.0, opts(24)).unwrap();
    assert!(r.value.abs() < 1e-12);
}

#[test]
fn matches_brute_force_double_sum() {
    let f = |x: f64| (3.0 * x).sin() + x * x;
    let u = field("sin(3*x1) + x1^2", 1);
    let d = BoxDomain::new(vec![-0.5], vec![1.0]).unwrap();
    let got = gagliardo_seminorm(&u, &d, 0.3, 2.5, opts(200)).unwrap();
    let want = brute_gagliardo_1d(f, -0.5, 1.0, 200, 0.3, 2.5);
    assert!((got.value - want).abs() < 1e-10 * want, "{} vs {}", got.value, want);
}

#[test]
fn integer_norm_sums_derivative_terms() {
    let u = field("x1^2", 1);
    let r = sobolev_norm(&u, &BoxDomain::unit(1), 1.0, 2.0, opts(512)).unwrap();
    let want = (1.0f64 / 5.0).sqrt() + (4.0f64 / 3.0).sqrt();
    assert!((r.value - want).abs() < 1e-4);
    assert!((r.value - r.combined_terms()).abs() < 1e-15);
}

#[test]
fn full_norm_variant_counts_top_order_twice() {
    let u = field("x1", 1);
    let d = BoxDomain::unit(1);
    let semi = sobolev_norm(&u, &d, 0.5, 2.0, opts(128)).unwrap();
    let full = sobolev_norm(
        &u,
        &d,
        0.5,
        2.0,
        QuadratureOptions {
            variant: NormVariant::FullNorm,
            ..opts(128)
        },
    )
    .unwrap();
    let top_lp = semi.terms[0].value;
    assert!((top_lp - (1.0f64 / 3.0).sqrt()).abs() < 1e-4);
    assert!((full.value - semi.value - top_lp).abs() < 1e-14);
    assert!((semi.variant_ratio.unwrap() - full.value / semi.value).abs() < 1e-12);
}

#[test]
fn extension_restricts_back_exactly() {
    let bump = "exp(-1/(x1*(1-x1)))";
    let inner = BoxDomain::unit(1);
    let outer = BoxDomain::new(vec![-1.0], vec![2.0]).unwrap();
    let support = BoxDomain::unit(1);
    let ext = extend_by_zero(&parse_expr(bump, 1).unwrap(), &support, &inner, &outer, 300, 1e-12);
    let ext = ext.unwrap();
    let back = ext.restrict(&inner).unwrap();
    assert_eq!(back.cells(), vec![100]);
    let u = parse_expr(bump, 1).unwrap();
    for (i, v) in back.values().iter().enumerate() {
        assert_eq!(*v, eval_expr(&u, &back.point(i)).unwrap());
    }
    let outside = ext.values().iter().enumerate().filter(|(i, _)| !inner.contains_interior(&ext.point(*i)));
    for (_, v) in outside {
        assert_eq!(*v, 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn norms_are_absolutely_homogeneous(c in -4.0f64..4.0, theta in 0.05f64..0.95, p in 1.2f64..4.0) {
        let u = field("sin(2*x1) + x1", 1);
        let d = BoxDomain::unit(1);
        let a = gagliardo_seminorm(&u, &d, theta, p, opts(64)).unwrap().value;
        let b = gagliardo_seminorm(&u.scaled(c), &d, theta, p, opts(64)).unwrap().value;
        prop_assert!((b - c.abs() * a).abs() <= 1e-10 * a.max(1.0));
    }

    #[test]
    fn triangle_inequality(a in -2.0f64..2.0, b in -2.0f64..2.0, s in 0.0f64..1.8, p in 1.2f64..3.5) {
        let d = BoxDomain::unit(1);
        let u = field(&format!("{a}*sin(3*x1)"), 1);
        let v = field(&format!("{b}*x1^2"), 1);
        let w = field(&format!("{a}*sin(3*x1) + {b}*x1^2"), 1);
        let nu = sobolev_norm(&u, &d, s, p, opts(48)).unwrap().value;
        let nv = sobolev_norm(&v, &d, s, p, opts(48)).unwrap().value;
        let nw = sobolev_norm(&w, &d, s, p, opts(48)).unwrap().value;
        prop_assert!(nw <= nu + nv + 1e-10);
    }

    #[test]
    fn reflection_leaves_seminorm_unchanged(theta in 0.05f64..0.95, p in 1.2f64..4.0) {
        let d = BoxDomain::unit(1);
        let u = gagliardo_seminorm(&field("exp(x1)", 1), &d, theta, p, opts(80)).unwrap().value;
        let r = gagliardo_seminorm(&field("exp(1 - x1)", 1), &d, theta, p, opts(80)).unwrap().value;
        prop_assert!((u - r).abs() <= 1e-10 * u);
    }

    #[test]
    fn larger_domain_gives_larger_norm(grow in 0.1f64..1.0, s in 0.0f64..1.5) {
        let u = field("cos(x1) * x2", 2);
        let small = BoxDomain::unit(2);
        let big = BoxDomain::new(vec![0.0, 0.0], vec![1.0 + grow, 1.0 + grow]).unwrap();
        let a = sobolev_norm(&u, &small, s, 2.0, opts(12)).unwrap();
        let b = sobolev_norm(&u, &big, s, 2.0, opts(12)).unwrap();
        prop_assert!(b.value + b.error_estimate >= a.value - a.error_estimate);
    }

    #[test]
    fn lp_norm_of_constant_is_exact(c in -5.0f64..5.0, p in 1.1f64..6.0) {
        let d = BoxDomain::new(vec![0.0, -1.0], vec![2.0, 1.0]).unwrap();
        let r = lp_norm(&Field::new(sobolev::Expr::constant(c)), &d, p, opts(16)).unwrap();
        prop_assert!((r.value - c.abs() * 4f64.powf(1.0 / p)).abs() < 1e-12 * c.abs().max(1.0));
    }
}

#[test]
fn seminorm_keeps_only_top_order_terms() {
    use sobolev::quadrature::sobolev_seminorm;
    let d = BoxDomain::unit(1);
    let half = sobolev_seminorm(&field("x1", 1), &d, 0.5, 2.0, opts(512)).unwrap();
    assert!((half.value - 1.0).abs() < 0.02);
    assert_eq!(half.terms.len(), 1);
    let one = sobolev_seminorm(&field("x1^2", 1), &d, 1.0, 2.0, opts(512)).unwrap();
    assert!((one.value - (4.0f64 / 3.0).sqrt()).abs() < 1e-4);
    assert!((one.value - one.combined_terms()).abs() < 1e-15);
}
