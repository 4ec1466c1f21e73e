use std::process::{Command, Output};

use hamext_core::phasespace::{equal_numeric, MomentumPoly};
use hamext_core::symexpr::Expr;
use hamext_core::systems::calogero;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hamext"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().expect("exit code")
}

fn json(args: &[&str]) -> (i32, Value) {
    let out = run(args);
    let v = serde_json::from_slice(&out.stdout).expect("json output");
    (out.status.code().unwrap(), v)
}

#[test]
fn construct_oscillator_11_prints_the_angular_momentum() {
    let out = run(&["construct", "oscillator", "1", "1"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("K_{1,1} = -p_x*u + p_u*x"), "{text}");
}

#[test]
fn construct_calogero_23_matches_the_printed_integral() {
    let (c, v) = json(&[
        "construct",
        "calogero",
        "2",
        "3",
        "--kappa",
        "0",
        "--format",
        "json",
    ]);
    assert_eq!(c, 0);
    assert_eq!(v["schema"], 1);
    let cal = calogero();
    let ext = cal.extension(2, 3, &Expr::zero()).unwrap();
    let ours = cal
        .parse_on(ext.chart(), v["K"]["plain"].as_str().unwrap())
        .unwrap();
    let printed = cal
        .fixture_expr(cal.fixture("K23").unwrap(), &Expr::zero())
        .unwrap();
    let printed = MomentumPoly::from_expr(ext.chart(), &printed).unwrap();
    let w = cal.extended_windows(ext.spec());
    let r = equal_numeric(
        &ours,
        &printed,
        &w,
        50,
        1e-9,
        &mut ChaCha8Rng::seed_from_u64(1),
    );
    assert!(r.unwrap().pass);

    let latex = run(&["construct", "calogero", "2", "3", "--format", "latex"]);
    let latex = String::from_utf8(latex.stdout).unwrap();
    assert!(
        latex.contains("K_{2,3} = ") && latex.contains("p_{\\phi}^{4}"),
        "{latex}"
    );
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(code(&["construct", "oscillator", "0", "1"]), 2);
    assert_eq!(code(&["construct", "oscillator", "1"]), 2);
    assert_eq!(code(&["construct", "nosuch", "1", "1"]), 2);
    assert_eq!(code(&["integrate", "oscillator", "1", "2", "--dt", "0"]), 2);
    assert_eq!(
        code(&["integrate", "oscillator", "1", "2", "--dt", "-0.1"]),
        2
    );
    assert_eq!(code(&["sweep", "oscillator", "0", "2"]), 2);
    assert_eq!(code(&["verify", "oscillator", "1", "1", "--kappa", "q"]), 2);
    assert_eq!(code(&["frobnicate"]), 2);
}

#[test]
fn verify_passes_on_printed_cases_and_fails_when_negated() {
    assert_eq!(code(&["verify", "oscillator", "3", "2"]), 0);
    for k in ["-1", "0", "1"] {
        assert_eq!(code(&["verify", "sphere3", "1", "2", "--kappa", k]), 0);
    }
    let (c, v) = json(&[
        "verify",
        "oscillator",
        "3",
        "2",
        "--self-test-negate",
        "--format",
        "json",
    ]);
    assert_eq!(c, 1);
    assert_eq!(v["pass"], false);
    let failed: Vec<&str> = v["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["pass"] == false)
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert_eq!(failed, ["K routes", "fixture G2", "fixture K32"]);
}

#[test]
fn verify_is_reproducible_under_a_seed() {
    let a = run(&[
        "verify", "calogero", "2", "3", "--seed", "9", "--format", "json",
    ])
    .stdout;
    let b = run(&[
        "verify", "calogero", "2", "3", "--seed", "9", "--format", "json",
    ])
    .stdout;
    assert_eq!(a, b);
}

#[test]
fn integrate_conserves_h_l_and_k() {
    for args in [
        [
            "integrate",
            "calogero",
            "2",
            "3",
            "--t-end",
            "10",
            "--dt",
            "1e-3",
        ],
        [
            "integrate",
            "oscillator",
            "1",
            "2",
            "--t-end",
            "10",
            "--dt",
            "1e-3",
        ],
    ] {
        let mut args = args.to_vec();
        args.extend(["--format", "json"]);
        let (c, v) = json(&args);
        assert_eq!(c, 0, "{v}");
        let reports = v["reports"].as_array().unwrap();
        for r in reports {
            let drift = r["drift"].as_f64().unwrap();
            match r["name"].as_str().unwrap() {
                "p_u" => assert!(drift > 0.1),
                _ => assert!(drift < 1e-6),
            }
        }
    }
}

#[test]
fn integrate_accepts_an_explicit_start() {
    let start = "phi=1.2,p_phi=0.4,u=1.5,p_u=0.3,a=1";
    let (c, v) = json(&[
        "integrate",
        "calogero",
        "2",
        "3",
        "--start",
        start,
        "--format",
        "json",
    ]);
    assert_eq!(c, 0);
    assert_eq!(v["start"]["phi"], 1.2);
    assert_eq!(
        code(&["integrate", "calogero", "2", "3", "--start", "zeta=1"]),
        2
    );
}

#[test]
fn sweep_reports_the_grid() {
    let (c, v) = json(&["sweep", "oscillator", "3", "3", "--format", "json"]);
    assert_eq!(c, 0);
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 9);
    for r in rows {
        let (m, n) = (r["m"].as_i64().unwrap(), r["n"].as_i64().unwrap());
        assert_eq!(r["degree"].as_i64().unwrap(), m + n - 1);
        assert_eq!(r["pass"], true);
    }
    assert_eq!(v["factorization"]["pass"], true);

    let (c, v) = json(&["sweep", "calogero", "2", "2", "--format", "json"]);
    assert_eq!(c, 0);
    assert!(v["rows"]
        .as_array()
        .unwrap()
        .iter()
        .any(|r| r["m"] == 2 && r["n"] == 2));
}

#[test]
fn system_files_are_loaded_and_validated() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("osc.toml");
    let body = r#"name = "osc"
coordinates = [["x", "p_x"]]
L = "1/2*p_x^2 + omega^2*x^2"
G = "x"
c_tilde = 0
L0_tilde = "omega^2"
parameters = { omega = [0.5, 2.0] }
windows = { x = [-2.0, 2.0] }
"#;
    std::fs::write(&good, body).unwrap();
    let path = good.to_str().unwrap();
    assert_eq!(code(&["verify", "--system-file", path, "2", "3"]), 0);

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, body.replace("\"omega^2\"", "\"2*omega^2\"")).unwrap();
    let out = run(&["verify", "--system-file", bad.to_str().unwrap(), "1", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("CG condition violated"));
}
