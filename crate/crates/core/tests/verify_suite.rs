use std::sync::Arc;

use hamext_core::phasespace::{poisson, CanonicalChart, MomentumPoly};
use hamext_core::symexpr::{Bindings, Evaluate, Expr};
use hamext_core::systems::{calogero, oscillator};
use hamext_core::verify::{bracket_residual, conservation_drift, fd_bracket_oracle};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn osc_start() -> Bindings {
    Bindings::new()
        .with("x", 0.5)
        .with("p_x", 0.3)
        .with("u", 1.0)
        .with("p_u", -0.2)
        .with("omega", 1.0)
}

fn cal_start() -> Bindings {
    Bindings::new()
        .with("phi", 1.2)
        .with("p_phi", 0.4)
        .with("u", 1.5)
        .with("p_u", 0.3)
        .with("a", 1.0)
}

/// Random polynomial of total momentum degree <= 3 in two degrees of freedom.
fn random_poly(rng: &mut ChaCha8Rng) -> MomentumPoly {
    let chart = Arc::new(CanonicalChart::new([("q1", "p1"), ("q2", "p2")]).unwrap());
    let coeffs = [
        "1",
        "q1",
        "q2^2",
        "sin(q1)",
        "cos(q2)",
        "q1*q2",
        "1/(2 + q1^2)",
    ];
    let mut terms = Vec::new();
    for _ in 0..rng.gen_range(2..6) {
        let a = rng.gen_range(0..=3);
        let b = rng.gen_range(0..=3 - a);
        let c = coeffs[rng.gen_range(0..coeffs.len())];
        let k = rng.gen_range(-3..=3);
        terms.push(format!("{k}*{c}*p1^{a}*p2^{b}"));
    }
    let e = hamext_core::symexpr::parse(&terms.join(" + ")).unwrap();
    MomentumPoly::from_expr(&chart, &e).unwrap()
}

#[test]
fn oracle_agrees_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..10 {
        let f = random_poly(&mut rng);
        let g = random_poly(&mut rng);
        let sym = poisson(&f, &g).unwrap();
        for _ in 0..20 {
            let b: Bindings = ["q1", "q2", "p1", "p2"]
                .iter()
                .map(|v| (v.to_string(), rng.gen_range(-1.0..1.0)))
                .collect();
            let (exact, scale) = sym.eval_scaled(&b).unwrap();
            let fd = fd_bracket_oracle(&f, &g, &b, 1e-5).unwrap();
            assert!(
                (fd - exact).abs() <= 1e-6 * (1.0 + scale),
                "{fd} vs {exact}"
            );
        }
    }
}

#[test]
fn oracle_agrees_on_calogero_k23() {
    let cal = calogero();
    let ext = cal.extension(2, 3, &Expr::zero()).unwrap();
    let h = ext.hamiltonian().unwrap();
    let k = ext
        .first_integral_operator(&ext.gn(&cal.g).unwrap())
        .unwrap();
    let sym = poisson(&h, &k).unwrap();
    let w = cal.extended_windows(ext.spec());
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let names = h.free_symbols().union(&k.free_symbols()).cloned().collect();
    for _ in 0..20 {
        let b = w.sample(&names, &mut rng).unwrap();
        let (exact, scale) = sym.eval_scaled(&b).unwrap();
        let fd = fd_bracket_oracle(&h, &k, &b, 1e-5).unwrap();
        // both sides vanish; the scale is that of the individual products
        let hk: f64 = h.eval(&b).unwrap().abs() * k.eval(&b).unwrap().abs();
        assert!(
            (fd - exact).abs() <= 1e-6 * (1.0 + scale + hk),
            "{fd} vs {exact}"
        );
    }
}

#[test]
fn bracket_residual_examples() {
    let osc = oscillator();
    let ext = osc.extension(1, 1, &Expr::zero()).unwrap();
    let h = ext.hamiltonian().unwrap();
    let k = ext
        .first_integral_operator(&ext.gn(&osc.g).unwrap())
        .unwrap();
    let w = osc.extended_windows(ext.spec());
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let r = bracket_residual(&h, &k, &w, 100, 1e-8, &mut rng).unwrap();
    assert!(r.pass && r.max_residual < 1e-14);

    let cal = calogero();
    let ext = cal.extension(2, 3, &Expr::zero()).unwrap();
    let h = ext.hamiltonian().unwrap();
    let w = cal.extended_windows(ext.spec());
    let printed = cal
        .fixture_expr(cal.fixture("K23").unwrap(), &Expr::zero())
        .unwrap();
    let printed = MomentumPoly::from_expr(ext.chart(), &printed).unwrap();
    assert!(
        bracket_residual(&h, &printed, &w, 100, 1e-8, &mut rng)
            .unwrap()
            .pass
    );
    let pu = MomentumPoly::momentum(ext.chart(), "p_u").unwrap();
    assert!(
        !bracket_residual(&h, &pu, &w, 100, 1e-8, &mut rng)
            .unwrap()
            .pass
    );
}

#[test]
fn oscillator_conservation_run() {
    let osc = oscillator();
    let ext = osc.extension(1, 2, &Expr::zero()).unwrap();
    let h = ext.hamiltonian().unwrap();
    let k = ext
        .first_integral_operator(&ext.gn(&osc.g).unwrap())
        .unwrap();
    let ints = [
        ("H".into(), h.clone()),
        ("L".into(), ext.lifted_l().clone()),
        ("K".into(), k),
    ];
    let reports = conservation_drift(&h, &ints, &osc_start(), 10.0, 1e-3, None).unwrap();
    for r in reports {
        assert!(r.drift < 1e-6 && !r.truncated, "{r:?}");
        assert_eq!(r.steps, 10_000);
    }
}

#[test]
fn calogero_conservation_run_and_negative_control() {
    let cal = calogero();
    let ext = cal.extension(2, 3, &Expr::zero()).unwrap();
    let h = ext.hamiltonian().unwrap();
    let k = ext
        .first_integral_operator(&ext.gn(&cal.g).unwrap())
        .unwrap();
    let pu = MomentumPoly::momentum(ext.chart(), "p_u").unwrap();
    let w = cal.extended_windows(ext.spec());
    let ints = [
        ("H".into(), h.clone()),
        ("L".into(), ext.lifted_l().clone()),
        ("K".into(), k),
        ("p_u".into(), pu),
    ];
    let reports = conservation_drift(&h, &ints, &cal_start(), 10.0, 1e-3, Some(&w)).unwrap();
    for r in &reports[..3] {
        assert!(r.drift < 1e-6 && !r.truncated, "{r:?}");
    }
    assert!(reports[3].drift > 0.1, "{:?}", reports[3]);
}

#[test]
fn step_halving_shows_fourth_order() {
    // At dt = 1e-3 the drift is at roundoff, so the order is read off at dt = 0.05.
    let cal = calogero();
    let ext = cal.extension(2, 3, &Expr::zero()).unwrap();
    let h = ext.hamiltonian().unwrap();
    let r = conservation_drift(
        &h,
        &[("H".into(), h.clone())],
        &cal_start(),
        10.0,
        0.05,
        None,
    )
    .unwrap();
    let ratio = r[0].drift / r[0].drift_half_step;
    assert!((8.0..=32.0).contains(&ratio), "{ratio}");

    let osc = oscillator();
    let ext = osc.extension(1, 2, &Expr::zero()).unwrap();
    let h = ext.hamiltonian().unwrap();
    let r = conservation_drift(
        &h,
        &[("H".into(), h.clone())],
        &osc_start(),
        10.0,
        0.05,
        None,
    )
    .unwrap();
    let ratio = r[0].drift / r[0].drift_half_step;
    assert!((8.0..=32.0).contains(&ratio), "{ratio}");
}
