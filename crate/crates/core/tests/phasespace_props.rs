use std::sync::Arc;

use hamext_core::phasespace::{poisson, xl_apply, CanonicalChart, Chart, MomentumPoly};
use hamext_core::sampling::{SampleWindow, Windows};
use hamext_core::symexpr::{zero_test, Expr};
use hamext_core::systems::builtins;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn chart() -> Chart {
    Arc::new(CanonicalChart::new([("q1", "p1"), ("q2", "p2")]).unwrap())
}

fn windows() -> Windows {
    let mut w = Windows::new();
    for v in ["q1", "q2", "p1", "p2"] {
        w.insert(v, SampleWindow::new(-1.5, 1.5));
    }
    w
}

fn coefficient() -> impl Strategy<Value = Expr> {
    let q1 = || Expr::var("q1");
    let q2 = || Expr::var("q2");
    prop_oneof![
        (-3i64..=3).prop_map(Expr::int),
        Just(q1()),
        Just(q2()),
        Just(Expr::sin(q1())),
        Just(Expr::cos(q2())),
        Just(q1() * q2()),
        Just(Expr::pow(Expr::int(2) + Expr::pow(Expr::sin(q1()), 2), -1)),
        Just(Expr::tag_s(q2(), Expr::int(-1))),
    ]
}

/// Random polynomials of momentum degree at most `deg`.
fn arb_poly(deg: u32) -> impl Strategy<Value = MomentumPoly> {
    let term = (coefficient(), 0..=deg, 0..=deg).prop_map(move |(c, a, b)| {
        let b = b.min(deg - a.min(deg));
        c * Expr::pow(Expr::var("p1"), a as i64) * Expr::pow(Expr::var("p2"), b as i64)
    });
    prop::collection::vec(term, 1..4)
        .prop_map(|ts| MomentumPoly::from_expr(&chart(), &Expr::sum(ts)).unwrap())
}

fn vanishes(p: &MomentumPoly, seed: u64) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    zero_test(p, &windows(), 20, 1e-9, &mut rng).unwrap().pass
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn antisymmetry(f in arb_poly(2), g in arb_poly(2)) {
        let fg = poisson(&f, &g).unwrap();
        let gf = poisson(&g, &f).unwrap();
        prop_assert_eq!(fg.clone(), gf.neg());
        prop_assert!(vanishes(&fg.add(&gf).unwrap(), 1));
    }

    #[test]
    fn leibniz(f in arb_poly(2), g in arb_poly(1), h in arb_poly(1)) {
        let lhs = poisson(&f, &g.mul(&h).unwrap()).unwrap();
        let rhs = poisson(&f, &g).unwrap().mul(&h).unwrap()
            .add(&g.mul(&poisson(&f, &h).unwrap()).unwrap()).unwrap();
        prop_assert!(vanishes(&lhs.sub(&rhs).unwrap(), 2));
    }

    #[test]
    fn jacobi(f in arb_poly(2), g in arb_poly(2), h in arb_poly(2)) {
        let a = poisson(&f, &poisson(&g, &h).unwrap()).unwrap();
        let b = poisson(&g, &poisson(&h, &f).unwrap()).unwrap();
        let c = poisson(&h, &poisson(&f, &g).unwrap()).unwrap();
        prop_assert!(vanishes(&a.add(&b).unwrap().add(&c).unwrap(), 3));
    }

    #[test]
    fn vector_field_is_a_derivation(l in arb_poly(2), f in arb_poly(1), g in arb_poly(2)) {
        let lhs = xl_apply(&l, &f.mul(&g).unwrap()).unwrap();
        let rhs = xl_apply(&l, &f).unwrap().mul(&g).unwrap()
            .add(&f.mul(&xl_apply(&l, &g).unwrap()).unwrap()).unwrap();
        prop_assert!(vanishes(&lhs.sub(&rhs).unwrap(), 4));
    }
}

#[test]
fn every_builtin_l_is_conserved_by_its_own_flow() {
    for s in builtins() {
        let r = xl_apply(&s.l, &s.l).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        assert!(
            zero_test(&r, &s.windows, 20, 1e-12, &mut rng).unwrap().pass,
            "{}",
            s.name
        );
    }
}

#[test]
fn printed_vector_fields_are_reproduced() {
    // Oscillator: X_L = p d/dx - 2 w^2 x d/dp
    let osc = hamext_core::systems::oscillator();
    assert_eq!(
        xl_apply(&osc.l, &osc.parse_poly("x").unwrap()).unwrap(),
        osc.parse_poly("p_x").unwrap()
    );
    assert_eq!(
        xl_apply(&osc.l, &osc.parse_poly("p_x").unwrap()).unwrap(),
        osc.parse_poly("-2*omega^2*x").unwrap()
    );
    // Calogero: X_L = p d/dphi + 2a cos/sin^3 d/dp
    let cal = hamext_core::systems::calogero();
    assert_eq!(
        xl_apply(&cal.l, &cal.parse_poly("phi").unwrap()).unwrap(),
        cal.parse_poly("p_phi").unwrap()
    );
    assert_eq!(
        xl_apply(&cal.l, &cal.parse_poly("p_phi").unwrap()).unwrap(),
        cal.parse_poly("2*a*cos(phi)/sin(phi)^3").unwrap()
    );
    // With that field the bracket forces X_L(cos phi) = -p sin(phi).
    assert_eq!(
        xl_apply(&cal.l, &cal.g).unwrap(),
        cal.parse_poly("-p_phi*sin(phi)").unwrap()
    );
}
