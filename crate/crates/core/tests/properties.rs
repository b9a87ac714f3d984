mod common;

use isoprod::classify::{
    classify_constant_h, classify_constant_k, CaseLabel, ClassifyError, DEFAULT_TOL,
};
use isoprod::expr::{parse, Expr};
use isoprod::geometry::{i_distance, IMotion, MongeSurface, ParametricSurface, Point3};
use isoprod::models::{homogeneity_degree, ProductionModel};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn tree(seed: u64) -> Expr {
    common::random_tree(&mut ChaCha8Rng::seed_from_u64(seed), 4)
}

fn point() -> impl Strategy<Value = [f64; 2]> {
    [0.5f64..3.0, 0.5f64..3.0]
}

fn point3() -> impl Strategy<Value = Point3> {
    [-10.0f64..10.0, -10.0f64..10.0, -10.0f64..10.0]
}

fn motion() -> impl Strategy<Value = IMotion> {
    (
        -2.0f64..2.0,
        -2.0f64..2.0,
        -2.0f64..2.0,
        -2.0f64..2.0,
        -2.0f64..2.0,
        0.0f64..std::f64::consts::TAU,
    )
        .prop_map(|(a, b, c, d, e, phi)| IMotion { a, b, c, d, e, phi })
}

fn nonzero(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
    (lo..hi, any::<bool>()).prop_map(|(v, neg)| if neg { -v } else { v })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn display_reparses_to_same_tree(seed in any::<u64>()) {
        let e = tree(seed);
        prop_assert_eq!(parse(&e.to_string()).unwrap(), e);
    }

    #[test]
    fn simplify_preserves_values_and_derivatives(seed in any::<u64>(), p in point()) {
        let e = tree(seed);
        let s = e.simplify();
        let at = [("x", p[0]), ("y", p[1])];
        for (a, b) in [(e.clone(), s.clone()), (e.diff("x"), s.diff("x"))] {
            if let (Ok(u), Ok(v)) = (a.eval(&at), b.eval(&at)) {
                prop_assert!((u - v).abs() <= 1e-9 * (1.0 + u.abs()), "{} vs {}", u, v);
            }
        }
    }

    #[test]
    fn symbolic_derivative_matches_difference_quotient(seed in any::<u64>(), p in point()) {
        let e = tree(seed);
        let at = |x: f64| e.eval(&[("x", x), ("y", p[1])]);
        let d = e.diff("x").eval(&[("x", p[0]), ("y", p[1])]);
        let step = 1e-5;
        if let (Ok(d), Ok(fp), Ok(fm), Ok(fp2), Ok(fm2)) =
            (d, at(p[0] + step), at(p[0] - step), at(p[0] + 2.0 * step), at(p[0] - 2.0 * step))
        {
            let central = (fp - fm) / (2.0 * step);
            let wide = (fp2 - fm2) / (4.0 * step);
            // only where the quotient itself is settled
            if (central - wide).abs() <= 1e-7 * (1.0 + central.abs()) {
                prop_assert!((d - central).abs() <= 1e-5 * (1.0 + d.abs()), "{} vs {}", d, central);
            }
        }
    }

    #[test]
    fn i_distance_is_a_pseudo_metric(p in point3(), q in point3(), s in point3(), z in -5.0f64..5.0) {
        prop_assert_eq!(i_distance(p, q), i_distance(q, p));
        prop_assert!(i_distance(p, s) <= i_distance(p, q) + i_distance(q, s) + 1e-12);
        prop_assert_eq!(i_distance(p, [p[0], p[1], p[2] + z]), 0.0);
    }

    #[test]
    fn i_motions_preserve_i_distance(m in motion(), p in point3(), q in point3()) {
        let (d0, d1) = (i_distance(p, q), i_distance(m.apply(p), m.apply(q)));
        prop_assert!((d0 - d1).abs() <= 1e-12 * (1.0 + d0));
    }

    #[test]
    fn i_motions_preserve_curvatures(m in motion(), p in [1.0f64..4.0, 1.0f64..4.0], seed in 0usize..4) {
        let h = ["x^0.3*y^0.6", "2*(1-exp(-x))*(1-exp(-0.5*y))", "x*y + x^2", "exp(0.3*x)*y^0.5"][seed];
        let s = MongeSurface::new(parse(h).unwrap());
        let before = s.curvatures(p).unwrap();
        let after = m.transform_monge(&s).curvatures(m.top_view(p)).unwrap();
        prop_assert!((before.relative - after.relative).abs() <= 1e-9);
        prop_assert!((before.mean - after.mean).abs() <= 1e-9);
        let par = ParametricSurface::from_monge(&s);
        let moved = m.transform_parametric(&par).curvatures(p).unwrap();
        prop_assert!((before.relative - moved.relative).abs() <= 1e-9);
        prop_assert!((before.mean - moved.mean).abs() <= 1e-9);
    }

    #[test]
    fn monge_and_parametric_curvatures_agree(seed in any::<u64>(), p in point()) {
        let s = MongeSurface::new(tree(seed));
        if let Ok(c) = s.curvatures(p) {
            let q = ParametricSurface::from_monge(&s).curvatures(p).unwrap();
            prop_assert!((c.relative - q.relative).abs() <= 1e-12 * (1.0 + c.relative.abs()));
            prop_assert!((c.mean - q.mean).abs() <= 1e-12 * (1.0 + c.mean.abs()));
        }
    }

    #[test]
    fn cobb_douglas_degree_is_sum_of_exponents(
        a in 0.1f64..10.0,
        alphas in proptest::collection::vec(0.05f64..2.0, 1..6),
    ) {
        let sum: f64 = alphas.iter().sum();
        let m = ProductionModel::cobb_douglas(a, alphas).unwrap();
        let p = homogeneity_degree(&m, DEFAULT_TOL).unwrap().degree.unwrap();
        prop_assert!((p - sum).abs() <= 1e-9);
    }

    #[test]
    fn closed_form_models_are_positive(
        a in 0.1f64..10.0,
        (ca, cb) in (-3.0f64..-0.01, -3.0f64..-0.01),
        (a1, b1, a2, b2) in (-2.0f64..2.0, -1.0f64..1.0, 0.05f64..2.0, -1.0f64..1.0),
        alphas in proptest::collection::vec(0.05f64..2.0, 1..6),
        x in proptest::collection::vec(0.01f64..20.0, 5),
    ) {
        let models = [
            ProductionModel::cobb_douglas(a, alphas).unwrap(),
            ProductionModel::spillman_mitscherlich(a, ca, cb).unwrap(),
            ProductionModel::transcendental(a, a1, b1, a2, b2).unwrap(),
        ];
        for m in models {
            let vars = m.variables();
            let at: Vec<(&str, f64)> = vars.iter().map(String::as_str).zip(x.iter().copied()).collect();
            prop_assert!(m.to_expr().eval(at.as_slice()).unwrap() > 0.0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn labels_are_translation_invariant(
        seed in 0usize..6,
        s in -0.4f64..2.0,
        t in -0.4f64..2.0,
    ) {
        let (f, g) = [
            ("exp(2*x)", "3*exp(5*y)"),
            ("x^0.5", "y^0.5"),
            ("2*x", "3*y"),
            ("x^0.3", "y^0.4"),
            ("x^2", "2"),
            ("1-exp(-x)", "1-exp(-2*y)"),
        ][seed];
        let (f, g) = (parse(f).unwrap(), parse(g).unwrap());
        let shift = |e: &Expr, v: &str, by: f64| e.substitute(v, &Expr::add(Expr::var(v), Expr::constant(by)));
        let (fs, gs) = (shift(&f, "x", s), shift(&g, "y", t));
        prop_assert_eq!(
            classify_constant_k(&f, &g, DEFAULT_TOL).unwrap().label,
            classify_constant_k(&fs, &gs, DEFAULT_TOL).unwrap().label
        );
        prop_assert_eq!(
            classify_constant_h(&f, &g, DEFAULT_TOL).unwrap().label,
            classify_constant_h(&fs, &gs, DEFAULT_TOL).unwrap().label
        );
    }

    #[test]
    fn exponential_sums_never_have_constant_h(
        a1 in nonzero(0.2, 1.5),
        a2 in nonzero(0.2, 1.5),
        b in [nonzero(0.5, 3.0), nonzero(0.5, 3.0), nonzero(0.5, 3.0), nonzero(0.5, 3.0)],
    ) {
        let sum = |v: &str, alpha: f64, b1: f64, b2: f64| {
            let term = |s: f64| Expr::exp(Expr::mul(Expr::constant(s * alpha), Expr::var(v)));
            Expr::add(Expr::mul(Expr::constant(b1), term(1.0)), Expr::mul(Expr::constant(b2), term(-1.0)))
        };
        let (f, g) = (sum("x", a1, b[0], b[1]), sum("y", a2, b[2], b[3]));
        prop_assert_eq!(classify_constant_h(&f, &g, DEFAULT_TOL).unwrap().label, CaseLabel::None);
    }

    #[test]
    fn no_product_surface_has_constant_positive_k(
        seed in any::<u64>(),
        other in any::<u64>(),
    ) {
        // random single-variable factors: trees in x and, renamed, in y
        let f = tree(seed).substitute("y", &Expr::constant(1.3));
        let g = tree(other).substitute("y", &Expr::constant(0.7)).substitute("x", &Expr::var("y"));
        match classify_constant_k(&f, &g, DEFAULT_TOL) {
            Ok(r) => {
                if let Some(v) = r.verdict {
                    prop_assert!(!(v.is_constant && v.mean > 0.0 && !v.is_zero()), "{:?}", v);
                }
            }
            Err(ClassifyError::Anomaly(msg)) => prop_assert!(false, "anomaly: {}", msg),
            Err(_) => {} // undefined on the grid
        }
    }
}

#[test]
fn mixed_degree_sum_is_not_homogeneous() {
    let m = ProductionModel::custom(parse("x^2 + y").unwrap()).unwrap();
    assert!(!homogeneity_degree(&m, DEFAULT_TOL).unwrap().is_homogeneous);
}
