use hamext_core::symexpr::{parse, tagged_cos, tagged_sin, Bindings, Expr, Parser};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Taylor series of `S_k` and `C_k`, summed until the terms vanish. Valid for
/// every sign of `k`, so it checks the branch dispatch independently.
fn series_s(x: f64, k: f64) -> f64 {
    let (mut term, mut acc, mut i): (f64, f64, f64) = (x, 0.0, 1.0);
    while term.abs() > 1e-18 * acc.abs().max(1e-300) || i < 4.0 {
        acc += term;
        term *= -k * x * x / ((i + 1.0) * (i + 2.0));
        i += 2.0;
    }
    acc
}

fn series_c(x: f64, k: f64) -> f64 {
    let (mut term, mut acc, mut i): (f64, f64, f64) = (1.0, 0.0, 0.0);
    while term.abs() > 1e-18 * acc.abs().max(1e-300) || i < 4.0 {
        acc += term;
        term *= -k * x * x / ((i + 1.0) * (i + 2.0));
        i += 2.0;
    }
    acc
}

fn kappas(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut ks = vec![-2.0, -1.0, 0.0, 1.0, 2.0];
    ks.extend((0..5).map(|_| rng.gen_range(-2.0..2.0)));
    ks
}

#[test]
fn tagged_functions_match_power_series() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for k in kappas(&mut rng) {
        for _ in 0..20 {
            let x: f64 = rng.gen_range(-1.5..1.5);
            let (s, c) = (tagged_sin(x, k), tagged_cos(x, k));
            assert!(
                (s - series_s(x, k)).abs() <= 1e-12 * s.abs().max(1.0),
                "S x={x} k={k}"
            );
            assert!(
                (c - series_c(x, k)).abs() <= 1e-12 * c.abs().max(1.0),
                "C x={x} k={k}"
            );
        }
    }
}

/// `(name, lhs - rhs, needs kappa != 0)` for every listed identity.
fn identities() -> Vec<(&'static str, Expr, bool)> {
    let p = Parser::with_params(["k"]);
    let e = |s: &str| p.parse(s).unwrap();
    vec![
        ("pythagorean", e("Ck(x,k)^2 + k*Sk(x,k)^2 - 1"), false),
        (
            "S(x+y)",
            e("Sk(x+y,k) - Sk(x,k)*Ck(y,k) - Ck(x,k)*Sk(y,k)"),
            false,
        ),
        (
            "S(x-y)",
            e("Sk(x-y,k) - Sk(x,k)*Ck(y,k) + Ck(x,k)*Sk(y,k)"),
            false,
        ),
        (
            "C(x+y)",
            e("Ck(x+y,k) - Ck(x,k)*Ck(y,k) + k*Sk(x,k)*Sk(y,k)"),
            false,
        ),
        (
            "C(x-y)",
            e("Ck(x-y,k) - Ck(x,k)*Ck(y,k) - k*Sk(x,k)*Sk(y,k)"),
            false,
        ),
        ("S(2x)", e("Sk(2*x,k) - 2*Sk(x,k)*Ck(x,k)"), false),
        ("C(2x)", e("Ck(2*x,k) - Ck(x,k)^2 + k*Sk(x,k)^2"), false),
        ("C(2x) via C", e("Ck(2*x,k) - 2*Ck(x,k)^2 + 1"), false),
        ("C(2x) via S", e("Ck(2*x,k) - 1 + 2*k*Sk(x,k)^2"), false),
        ("C^2 bisection", e("Ck(x,k)^2 - (1 + Ck(2*x,k))/2"), false),
        (
            "S^2 bisection",
            e("Sk(x,k)^2 - (1 - Ck(2*x,k))/(2*k)"),
            true,
        ),
    ]
}

#[test]
fn tagged_identities_numerically() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for k in kappas(&mut rng) {
        for (name, id, nonzero) in identities() {
            if nonzero && k == 0.0 {
                continue;
            }
            for _ in 0..20 {
                let b = Bindings::new()
                    .with("x", rng.gen_range(-1.5..1.5))
                    .with("y", rng.gen_range(-1.5..1.5))
                    .with("k", k);
                let scale = id
                    .additive_terms()
                    .iter()
                    .map(|t| t.eval(&b).unwrap().abs());
                let scale = scale.fold(1.0, f64::max);
                let v = id.eval(&b).unwrap();
                assert!(v.abs() <= 1e-12 * scale, "{name} at k={k}: {v}");
            }
        }
    }
}

#[test]
fn derivative_relations_and_ode() {
    let p = Parser::with_params(["k"]);
    let s = p.parse("Sk(x,k)").unwrap();
    let c = p.parse("Ck(x,k)").unwrap();
    assert_eq!(s.diff("x"), c);
    assert_eq!(c.diff("x"), p.parse("-k*Sk(x,k)").unwrap());
    for f in [s, c, p.parse("3*Sk(x,k) - 2*Ck(x,k)").unwrap()] {
        let ode = f.diff("x").diff("x") + Expr::param("k") * f.clone();
        assert!(ode.expand().is_zero(), "{f}");
    }
}

#[test]
fn derivative_relations_numerically() {
    let p = Parser::with_params(["k"]);
    let s = p.parse("Sk(x,k)").unwrap();
    let c = p.parse("Ck(x,k)").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let h = 1e-5;
    for k in kappas(&mut rng) {
        for _ in 0..20 {
            let x: f64 = rng.gen_range(-1.5..1.5);
            let fd_s = (tagged_sin(x + h, k) - tagged_sin(x - h, k)) / (2.0 * h);
            let fd_c = (tagged_cos(x + h, k) - tagged_cos(x - h, k)) / (2.0 * h);
            let b = Bindings::new().with("x", x).with("k", k);
            assert!((fd_s - s.diff("x").eval(&b).unwrap()).abs() < 1e-8);
            assert!((fd_c - c.diff("x").eval(&b).unwrap()).abs() < 1e-8);
        }
    }
}

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        Just(Expr::var("x")),
        Just(Expr::var("y")),
        Just(Expr::param("k")),
        (-3i64..=3, 1i64..=3).prop_map(|(n, d)| Expr::rational(n, d)),
    ]
}

/// Expressions of depth at most 6 with no poles on the sampling box.
fn arb_expr() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(6, 48, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 2..4).prop_map(Expr::sum),
            prop::collection::vec(inner.clone(), 2..3).prop_map(Expr::product),
            (inner.clone(), 2i64..=3).prop_map(|(b, k)| Expr::pow(b, k)),
            inner
                .clone()
                .prop_map(|a| Expr::pow(Expr::int(2) + Expr::pow(Expr::sin(a), 2), -1)),
            inner.clone().prop_map(Expr::sin),
            inner.clone().prop_map(Expr::cos),
            inner.clone().prop_map(|a| Expr::sinh(Expr::sin(a))),
            inner.clone().prop_map(|a| Expr::cosh(Expr::cos(a))),
            inner.clone().prop_map(|a| Expr::tag_s(a, Expr::param("k"))),
            inner
                .clone()
                .prop_map(|a| Expr::tag_c(Expr::sin(a), Expr::param("k"))),
        ]
    })
}

fn point() -> impl Strategy<Value = Bindings> {
    (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0)
        .prop_map(|(x, y, k)| Bindings::new().with("x", x).with("y", y).with("k", k))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn parse_print_round_trip(e in arb_expr()) {
        let text = e.to_string();
        let back = Parser::with_params(["k"]).parse(&text).unwrap();
        prop_assert_eq!(back, e);
    }

    #[test]
    fn simplify_is_idempotent(e in arb_expr()) {
        let once = e.simplify();
        prop_assert_eq!(once.simplify(), once);
    }

    #[test]
    fn diff_is_linear(f in arb_expr(), g in arb_expr(), a in -3i64..=3, c in -3i64..=3, b in point()) {
        let lhs = (Expr::int(a) * f.clone() + Expr::int(c) * g.clone()).diff("x");
        let rhs = Expr::int(a) * f.diff("x") + Expr::int(c) * g.diff("x");
        prop_assert_eq!(lhs.expand(), rhs.expand());
        let (l, r) = (lhs.eval(&b).unwrap(), rhs.eval(&b).unwrap());
        prop_assert!((l - r).abs() <= 1e-9 * (1.0 + l.abs()));
    }

    #[test]
    fn diff_matches_central_differences(e in arb_expr(), b in point()) {
        let h = 1e-6;
        let x = b.get("x").unwrap();
        let at = |v: f64| e.eval(&b.clone().with("x", v)).unwrap();
        let fd = (at(x + h) - at(x - h)) / (2.0 * h);
        let exact = e.diff("x").eval(&b).unwrap();
        let scale = 1.0 + exact.abs() + at(x).abs();
        prop_assert!((fd - exact).abs() <= 1e-6 * scale, "{} : fd {} vs {}", e, fd, exact);
    }
}

#[test]
fn plain_parse_has_no_parameters() {
    assert_eq!(parse("k").unwrap(), Expr::var("k"));
}
