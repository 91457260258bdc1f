use std::f64::consts::PI;

use proptest::prelude::*;
use sobolev::atlas::{AtlasConfig, ManifoldId};
use sobolev::manifold_norms::{
    chart_sobolev_norm, compare_norms, connection_sobolev_norm, manifold_integral, manifold_lq_norm,
    overlap_consistency, ConnectionCombination, Manifold, ManifoldFunction, NormChoice,
};
use sobolev::geometry::{TensorField, Valence};
use sobolev::quadrature::{sobolev_norm, Field, QuadratureOptions};
use sobolev::{eval_expr, parse_expr, Expr};

fn scalar(text: &str, n: usize) -> ManifoldFunction {
    ManifoldFunction::scalar(parse_expr(text, n).unwrap())
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `Re (x1 + i x2)^k` or `Im (x1 + i x2)^k` as a polynomial.
fn complex_power(k: u32, imaginary: bool) -> String {
    let terms: Vec<String> = (0..=k)
        .filter(|j| (j % 2 == 1) == imaginary)
        .map(|j| {
            let sign = if (j / 2) % 2 == 0 { 1.0 } else { -1.0 };
            format!("{}*x1^{}*x2^{}", sign * binomial(k, j), k - j, j)
        })
        .collect();
    terms.join(" + ")
}

fn trig_family() -> Vec<ManifoldFunction> {
    (1..=5)
        .flat_map(|k| [scalar(&complex_power(k, false), 2), scalar(&complex_power(k, true), 2)])
        .collect()
}

/// Sum over charts of `||psi||_{L^2} + ||psi'||_{L^2}` on the truncation box,
/// with `psi'` from central differences of the frozen partition.
fn unit_chart_norm_oracle(m: &Manifold, n: usize) -> f64 {
    let mut total = 0.0;
    for (a, chart) in m.atlas().charts().iter().enumerate() {
        let psi = m.pou().local(a);
        let (lo, hi) = (chart.truncation().lo()[0], chart.truncation().hi()[0]);
        let h = (hi - lo) / n as f64;
        let eps = 1e-6;
        let (mut l2, mut d2) = (0.0, 0.0);
        for i in 0..n {
            let x = lo + (i as f64 + 0.5) * h;
            let v = eval_expr(psi, &[x]).unwrap();
            let d = (eval_expr(psi, &[x + eps]).unwrap() - eval_expr(psi, &[x - eps]).unwrap()) / (2.0 * eps);
            l2 += v * v * h;
            d2 += d * d * h;
        }
        total += l2.sqrt() + d2.sqrt();
    }
    total
}

#[test]
fn closed_form_lebesgue_norms() {
    let s1 = Manifold::builtin(ManifoldId::S1Stereo);
    let t1 = Manifold::builtin(ManifoldId::Torus1);
    let one = manifold_lq_norm(&ManifoldFunction::scalar(Expr::one()), &s1, 2.0, Some(512)).unwrap();
    assert!((one.def2.value / (2.0 * PI).sqrt() - 1.0).abs() < 0.005);
    let unit = manifold_lq_norm(&ManifoldFunction::scalar(Expr::one()), &t1, 2.0, Some(512)).unwrap();
    assert!((unit.def2.value - 1.0).abs() < 1e-9);
    let sine = manifold_lq_norm(&scalar("sin(2*pi*x1)", 1), &t1, 2.0, Some(512)).unwrap();
    assert!((sine.def2.value * 2f64.sqrt() - 1.0).abs() < 0.005);
    assert_eq!(sine.def2.atlas_id, "torus1-default");
    assert_eq!(sine.def2.pou_id, "torus1-default-pou");
}

#[test]
fn sphere_area() {
    let s2 = Manifold::builtin(ManifoldId::S2Stereo);
    let r = manifold_lq_norm(&ManifoldFunction::scalar(Expr::one()), &s2, 2.0, Some(128)).unwrap();
    assert!((r.def2.value.powi(2) / (4.0 * PI) - 1.0).abs() < 0.005, "{}", r.def2.value);
}

#[test]
fn connection_norm_closed_form() {
    let t1 = Manifold::builtin(ManifoldId::Torus1);
    let u = scalar("sin(2*pi*x1)", 1);
    let r = connection_sobolev_norm(&u, &t1, 1, 2.0, Some(512), ConnectionCombination::LqSum).unwrap();
    let want = (0.5 + (2.0 * PI).powi(2) / 2.0).sqrt();
    assert!((r.value / want - 1.0).abs() < 0.005);
    let k0 = connection_sobolev_norm(&u, &t1, 0, 2.0, Some(512), ConnectionCombination::LqSum).unwrap();
    let lq = manifold_lq_norm(&u, &t1, 2.0, Some(512)).unwrap();
    assert_eq!(k0.value, lq.def2.value);
}

#[test]
fn chart_norm_regression_against_oracle() {
    let t1 = Manifold::builtin(ManifoldId::Torus1);
    let oracle = unit_chart_norm_oracle(&t1, 1024);
    let r = chart_sobolev_norm(&ManifoldFunction::scalar(Expr::one()), &t1, 1.0, 2.0, None).unwrap();
    assert!((r.value / oracle - 1.0).abs() < 0.01, "{} vs {}", r.value, oracle);
    const PINNED: f64 = 23.1895;
    assert!((r.value / PINNED - 1.0).abs() < 0.01);
    assert!((r.value - r.combined_breakdown()).abs() < 1e-12);
}

/// `exp(-1/(1 - ((t - c)/w)^2))` inside `|t - c| < w`, zero outside.
fn bump(t: &Expr, c: f64, w: f64) -> Expr {
    let r = t.sub(&Expr::constant(c)).scale(1.0 / w);
    Expr::one().sub(&r.mul(&r)).flat(0)
}

#[test]
fn single_chart_function_reduces_to_euclidean_norm() {
    let t1 = Manifold::builtin(ManifoldId::Torus1);
    let t = Expr::var(0);
    let local0 = bump(&t, 0.5, 0.2);
    // chart 1 sees (0.3, 0.5) directly and (0.5, 0.7) shifted by -1
    let local1 = bump(&t, 0.5, 0.2).add(&bump(&t.add(&Expr::one()), 0.5, 0.2));
    let field = TensorField::new(Valence::SCALAR, 1, vec![vec![local0.clone()], vec![local1]]).unwrap();
    assert!(overlap_consistency(&field, &t1, 400).unwrap() < 1e-12);
    let psi = t1.pou().local(0);
    for x in [0.3, 0.5, 0.7] {
        assert_eq!(eval_expr(psi, &[x]).unwrap(), 1.0);
    }
    let tb = t1.atlas().chart(0).unwrap().truncation().clone();
    let euclid = sobolev_norm(&Field::new(local0), &tb, 1.0, 2.0, QuadratureOptions::with_grid(512)).unwrap();
    let r = chart_sobolev_norm(&ManifoldFunction::Local(field), &t1, 1.0, 2.0, Some(512)).unwrap();
    assert!(r.breakdown[1].value.abs() < 1e-14);
    assert!((r.value / euclid.value - 1.0).abs() < 1e-12, "{} vs {}", r.value, euclid.value);
}

#[test]
fn same_variant_gives_unit_ratios() {
    let s1 = Manifold::builtin(ManifoldId::S1Stereo);
    let c = NormChoice::Chart { manifold: &s1, e: 1.0 };
    let r = compare_norms(&trig_family()[..4], c, c, 2.0, Some(128)).unwrap();
    assert!(r.ratios.iter().all(|x| *x == 1.0));
}

#[test]
fn partitions_give_equivalent_norms() {
    let s1 = Manifold::builtin(ManifoldId::S1Stereo);
    let alt = Manifold::from_config(AtlasConfig::builtin_with(ManifoldId::S1Stereo, 1.2, 2.5)).unwrap();
    let a = NormChoice::Chart { manifold: &s1, e: 1.0 };
    let b = NormChoice::Chart { manifold: &alt, e: 1.0 };
    let fam = trig_family();
    let coarse = compare_norms(&fam, a, b, 2.0, Some(256)).unwrap();
    let fine = compare_norms(&fam, a, b, 2.0, Some(512)).unwrap();
    for r in [&coarse, &fine] {
        assert!(r.ratios.iter().all(|x| x.is_finite() && *x > 0.0));
        assert!(r.scale_deviation.iter().all(|d| *d < 1e-8));
    }
    for i in 0..2 {
        assert!((fine.bracket[i] / coarse.bracket[i] - 1.0).abs() < 0.05);
    }
}

#[test]
fn mean_zero_function_integrates_to_zero() {
    let t2 = Manifold::builtin(ManifoldId::Torus2);
    let f = TensorField::function(
        t2.atlas(),
        &parse_expr("cos(2*pi*x1) * sin(4*pi*x2)", 2).unwrap(),
    );
    let (value, err) = manifold_integral(&f, &t2, Some(64)).unwrap();
    assert!(value.abs() <= err.max(1e-12));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn chart_norm_is_absolutely_homogeneous(c in -5.0f64..5.0, e in 0.0f64..1.6) {
        let s1 = Manifold::builtin(ManifoldId::S1Stereo);
        let u = scalar("x1 + x2^2", 2);
        let a = chart_sobolev_norm(&u, &s1, e, 2.0, Some(96)).unwrap().value;
        let b = chart_sobolev_norm(&u.scaled(c), &s1, e, 2.0, Some(96)).unwrap().value;
        prop_assert!((b - c.abs() * a).abs() <= 1e-10 * a.max(1.0));
    }

    #[test]
    fn lebesgue_definitions_stay_comparable(k in 1u32..6, imaginary in any::<bool>(), q in 1.5f64..4.0) {
        let s1 = Manifold::builtin(ManifoldId::S1Stereo);
        let u = scalar(&complex_power(k, imaginary), 2);
        let r = manifold_lq_norm(&u, &s1, q, Some(256)).unwrap();
        prop_assert!(r.ratio > 0.5 && r.ratio < 4.0, "ratio {}", r.ratio);
        let r5 = manifold_lq_norm(&u.scaled(5.0), &s1, q, Some(256)).unwrap();
        prop_assert!((r5.ratio - r.ratio).abs() < 1e-8 * r.ratio);
    }

    #[test]
    fn reports_are_reproducible(k in 1u32..4) {
        let t2 = Manifold::builtin(ManifoldId::Torus2);
        let u = scalar(&format!("sin(2*pi*{k}*x1) * cos(2*pi*x2)"), 2);
        let a = connection_sobolev_norm(&u, &t2, 1, 2.0, Some(32), ConnectionCombination::LqSum).unwrap();
        let b = connection_sobolev_norm(&u, &t2, 1, 2.0, Some(32), ConnectionCombination::LqSum).unwrap();
        prop_assert_eq!(a, b);
    }
}
