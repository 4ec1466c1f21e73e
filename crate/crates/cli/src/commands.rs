use std::collections::BTreeSet;
use std::fmt::{self, Write as _};

use hamext_core::extension::{gn_closed, Extension, EXT_COORDINATE, EXT_MOMENTUM};
use hamext_core::phasespace::{equal_numeric, MomentumPoly};
use hamext_core::symexpr::{Bindings, Expr, Parser, Rational, ZeroReport};
use hamext_core::systems::{builtin, load_system, SystemDef};
use hamext_core::verify::{bracket_residual, conservation_drift};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::{IntegrateArgs, Target, VerifyArgs};

pub const SCHEMA: u32 = 1;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(hamext_core::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl<E: Into<hamext_core::Error>> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError::Core(e.into())
    }
}

/// What a command produced. `latex` falls back to `plain` when absent.
pub struct Outcome {
    pub pass: bool,
    pub plain: String,
    pub latex: Option<String>,
    pub json: Value,
}

struct Resolved {
    system: SystemDef,
    m: u32,
    n: u32,
    kappa: Expr,
}

impl Resolved {
    fn header(&self) -> Value {
        json!({
            "schema": SCHEMA,
            "system": self.system.name,
            "m": self.m,
            "n": self.n,
            "kappa": self.kappa.to_string(),
        })
    }

    fn extension(&self) -> Result<Extension, CliError> {
        Ok(self.system.extension(self.m, self.n, &self.kappa)?)
    }

    fn bound(&self) -> i64 {
        self.m as i64 + self.n as i64 * (1 + self.system.g.degree()) - 1
    }
}

fn parse_count(text: &str, what: &str) -> Result<u32, CliError> {
    match text.parse::<u32>() {
        Ok(v) if v >= 1 => Ok(v),
        _ => Err(CliError::Usage(format!(
            "{what} must be a positive integer, got `{text}`"
        ))),
    }
}

fn parse_kappa(text: &str) -> Result<Expr, CliError> {
    let e = Parser::new()
        .parse(text)
        .map_err(|e| CliError::Usage(format!("--kappa: {e}")))?
        .simplify();
    if e.as_const().is_none() {
        return Err(CliError::Usage(format!(
            "--kappa must be a rational constant, got `{text}`"
        )));
    }
    Ok(e)
}

fn resolve(t: &Target, default_mn: (u32, u32)) -> Result<Resolved, CliError> {
    let (system, rest) = match &t.system_file {
        Some(path) => (load_system(path)?, &t.positional[..]),
        None => {
            let (name, rest) = t
                .positional
                .split_first()
                .ok_or_else(|| CliError::Usage("missing system name".into()))?;
            (builtin(name)?, rest)
        }
    };
    let (m, n) = match rest {
        [] => default_mn,
        [m, n] => (parse_count(m, "m")?, parse_count(n, "n")?),
        _ => return Err(CliError::Usage("expected both m and n, or neither".into())),
    };
    if !(t.tol.is_finite() && t.tol > 0.0) || t.trials == 0 {
        return Err(CliError::Usage(
            "--trials and --tol must be positive".into(),
        ));
    }
    Ok(Resolved {
        system,
        m,
        n,
        kappa: parse_kappa(&t.kappa)?,
    })
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn construct(t: &Target) -> Result<Outcome, CliError> {
    let r = resolve(t, (1, 1))?;
    let ext = r.extension()?;
    let gn = ext.gn(&r.system.g)?;
    let h = ext.hamiltonian()?;
    let k = ext.first_integral_operator(&gn)?;
    let (m, n) = (r.m, r.n);

    let mut plain = format!(
        "system {}  (m, n) = ({m}, {n})  kappa = {}\n",
        r.system.name, r.kappa
    );
    writeln!(plain, "G_{n} = {gn}").unwrap();
    writeln!(plain, "H_{{{m},{n}}} = {h}").unwrap();
    writeln!(plain, "K_{{{m},{n}}} = {k}").unwrap();
    writeln!(
        plain,
        "degree: G_{n} {}, K {} (bound {})",
        gn.degree(),
        k.degree(),
        r.bound()
    )
    .unwrap();

    let latex = format!(
        "G_{{{n}}} = {}\nH_{{{m},{n}}} = {}\nK_{{{m},{n}}} = {}\n",
        gn.to_latex(),
        h.to_latex(),
        k.to_latex()
    );

    let obj = |p: &MomentumPoly| json!({ "plain": p.to_string(), "latex": p.to_latex() });
    let mut json = r.header();
    json["command"] = json!("construct");
    json["G_n"] = obj(&gn);
    json["H"] = obj(&h);
    json["K"] = obj(&k);
    json["degree"] = json!({ "G_n": gn.degree(), "K": k.degree(), "bound": r.bound() });
    Ok(Outcome {
        pass: true,
        plain,
        latex: Some(latex),
        json,
    })
}

#[derive(Debug, Serialize)]
struct Check {
    name: String,
    pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_residual: Option<f64>,
    detail: String,
}

impl Check {
    fn sampled(name: impl Into<String>, r: &ZeroReport, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            pass: r.pass,
            max_residual: Some(r.max_residual),
            detail: format!("{} ({} points)", detail.into(), r.samples),
        }
    }
}

fn render_checks(title: &str, checks: &[Check]) -> String {
    let mut out = format!("{title}\n");
    for c in checks {
        let residual = c
            .max_residual
            .map(|v| format!("{v:.2e}"))
            .unwrap_or_else(|| "-".into());
        let verdict = if c.pass { "PASS" } else { "FAIL" };
        writeln!(
            out,
            "  {verdict}  {:<16} {residual:>9}  {}",
            c.name, c.detail
        )
        .unwrap();
    }
    let ok = checks.iter().all(|c| c.pass);
    writeln!(
        out,
        "{}",
        if ok {
            "all checks passed"
        } else {
            "verification FAILED"
        }
    )
    .unwrap();
    out
}

fn fixture_applies(f_kappa: Option<i64>, kappa: &Expr) -> bool {
    f_kappa.is_none_or(|k| *kappa == Expr::int(k))
}

pub fn verify(a: &VerifyArgs) -> Result<Outcome, CliError> {
    let t = &a.target;
    let r = resolve(t, (1, 1))?;
    let s = &r.system;
    let (m, n) = (r.m, r.n);
    let sign = if a.self_test_negate {
        Rational::from_integer((-1).into())
    } else {
        Rational::from_integer(1.into())
    };
    let mut rng = rng(t.seed);
    let mut checks = Vec::new();

    let cg = s.check_cg(t.trials, t.tol, t.seed)?;
    checks.push(Check::sampled(
        "cg",
        &cg,
        format!("c = {}, L0 = {}", s.c_tilde, s.l0_tilde),
    ));

    let ext = r.extension()?;
    let ew = s.extended_windows(ext.spec());
    let gn = ext.gn(&s.g)?;
    let closed = gn_closed(&s.l, &s.g, ext.lambda(), n)?;
    let z = equal_numeric(&gn, &closed, &s.windows, t.trials, t.tol, &mut rng)?;
    checks.push(Check::sampled("G_n routes", &z, "recursion vs closed sum"));

    let h = ext.hamiltonian()?;
    let k = ext.first_integral_operator(&gn)?;
    let k_pd = ext.first_integral_pd(&gn)?.scale_rational(&sign);
    let z = equal_numeric(&k, &k_pd, &ew, t.trials, t.tol, &mut rng)?;
    checks.push(Check::sampled("K routes", &z, "operator power vs P/D form"));

    let z = bracket_residual(&h, &k, &ew, t.trials, t.tol, &mut rng)?;
    checks.push(Check::sampled("{H, K}", &z, "bracket vanishes"));
    let z = bracket_residual(&h, ext.lifted_l(), &ew, t.trials, t.tol, &mut rng)?;
    checks.push(Check::sampled("{H, L}", &z, "bracket vanishes"));

    let dg = s.g.degree();
    let gn_bound = n as i64 * (1 + dg) - 1;
    checks.push(Check {
        name: "degree".into(),
        pass: gn.degree() <= gn_bound && k.degree() <= r.bound(),
        max_residual: None,
        detail: format!(
            "deg G_n = {} <= {gn_bound}, deg K = {} <= {}",
            gn.degree(),
            k.degree(),
            r.bound()
        ),
    });

    let g_label = format!("G{n}");
    let k_label = format!("K{m}{n}");
    for f in s
        .fixtures
        .iter()
        .filter(|f| !f.misprint && fixture_applies(f.kappa, &r.kappa))
    {
        let (ours, chart, windows) = if f.label == g_label {
            (&gn, &s.chart, &s.windows)
        } else if f.label == k_label {
            (&k, ext.chart(), &ew)
        } else {
            continue;
        };
        let printed = MomentumPoly::from_expr(chart, &s.fixture_expr(f, &r.kappa)?)?;
        let z = equal_numeric(
            ours,
            &printed.scale_rational(&sign),
            windows,
            t.trials,
            t.tol,
            &mut rng,
        )?;
        checks.push(Check::sampled(
            format!("fixture {}", f.label),
            &z,
            "printed expression",
        ));
    }

    let pass = checks.iter().all(|c| c.pass);
    let title = format!("verify {} ({m}, {n}) kappa = {}", s.name, r.kappa);
    let mut json = r.header();
    json["command"] = json!("verify");
    json["trials"] = json!(t.trials);
    json["tol"] = json!(t.tol);
    json["seed"] = json!(t.seed);
    json["self_test_negate"] = json!(a.self_test_negate);
    json["checks"] = serde_json::to_value(&checks).expect("serializable");
    json["pass"] = json!(pass);
    Ok(Outcome {
        pass,
        plain: render_checks(&title, &checks),
        latex: None,
        json,
    })
}

fn parse_start(text: &str) -> Result<Vec<(String, f64)>, CliError> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|item| {
            let (k, v) = item.split_once('=').ok_or_else(|| {
                CliError::Usage(format!("--start entry `{item}` is not name=value"))
            })?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("--start value `{v}` is not a number")))?;
            Ok((k.trim().to_string(), v))
        })
        .collect()
}

pub fn integrate(a: &IntegrateArgs) -> Result<Outcome, CliError> {
    let t = &a.target;
    if !(a.dt.is_finite() && a.dt > 0.0) {
        return Err(CliError::Usage(format!(
            "--dt must be positive, got {}",
            a.dt
        )));
    }
    if !(a.t_end.is_finite() && a.t_end > 0.0) {
        return Err(CliError::Usage(format!(
            "--t-end must be positive, got {}",
            a.t_end
        )));
    }
    let r = resolve(t, (1, 1))?;
    let s = &r.system;
    let ext = r.extension()?;
    let ew = s.extended_windows(ext.spec());

    let names: BTreeSet<String> = ext
        .chart()
        .pairs()
        .iter()
        .flat_map(|(q, p)| [q.clone(), p.clone()])
        .chain(s.parameters.keys().cloned())
        .collect();
    let mut start: Bindings = ew.sample(&names, &mut rng(t.seed))?;
    for (k, v) in parse_start(a.start.as_deref().unwrap_or(""))? {
        if !names.contains(&k) {
            return Err(CliError::Usage(format!(
                "--start names unknown variable `{k}`"
            )));
        }
        start.set(k, v);
    }

    let h = ext.hamiltonian()?;
    let k = ext.first_integral_operator(&ext.gn(&s.g)?)?;
    let pu = MomentumPoly::momentum(ext.chart(), EXT_MOMENTUM)?;
    let integrals = [
        ("H".to_string(), h.clone()),
        ("L".to_string(), ext.lifted_l().clone()),
        ("K".to_string(), k),
    ];
    let mut reports = conservation_drift(&h, &integrals, &start, a.t_end, a.dt, Some(&ew))?;
    let truncated = reports.iter().any(|d| d.truncated);
    let pass = !truncated && reports.iter().all(|d| d.drift < a.drift_tol);
    // p_u is reported as a control; it is not expected to be conserved.
    let control = conservation_drift(&h, &[("p_u".into(), pu)], &start, a.t_end, a.dt, Some(&ew))?;
    reports.extend(control);

    let mut plain = format!(
        "integrate {} ({}, {}) kappa = {}  t_end = {}  dt = {}\n  start:",
        s.name, r.m, r.n, r.kappa, a.t_end, a.dt
    );
    for n in &names {
        write!(plain, " {n}={:.6}", start.get(n).unwrap_or(f64::NAN)).unwrap();
    }
    plain.push('\n');
    for d in &reports {
        let role = if d.name == EXT_MOMENTUM {
            "control"
        } else if d.drift < a.drift_tol {
            "PASS"
        } else {
            "FAIL"
        };
        writeln!(
            plain,
            "  {role:<7} {:<4} drift {:.3e}  half-step {:.3e}  ratio {:.2}",
            d.name,
            d.drift,
            d.drift_half_step,
            d.drift / d.drift_half_step
        )
        .unwrap();
    }
    if truncated {
        writeln!(
            plain,
            "  run truncated near a pole after {} steps",
            reports[0].steps
        )
        .unwrap();
    }
    writeln!(
        plain,
        "{}",
        if pass {
            "conserved"
        } else {
            "conservation FAILED"
        }
    )
    .unwrap();

    let mut json = r.header();
    json["command"] = json!("integrate");
    json["t_end"] = json!(a.t_end);
    json["dt"] = json!(a.dt);
    json["drift_tol"] = json!(a.drift_tol);
    json["start"] = names
        .iter()
        .map(|n| (n.clone(), json!(start.get(n))))
        .collect::<serde_json::Map<_, _>>()
        .into();
    json["reports"] = serde_json::to_value(&reports).expect("serializable");
    json["truncated"] = json!(truncated);
    json["pass"] = json!(pass);
    Ok(Outcome {
        pass,
        plain,
        latex: None,
        json,
    })
}

#[derive(Debug, Serialize)]
struct SweepRow {
    m: u32,
    n: u32,
    degree: i64,
    bound: i64,
    bracket_k: f64,
    bracket_l: f64,
    pass: bool,
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub fn sweep(t: &Target) -> Result<Outcome, CliError> {
    let r = resolve(t, (3, 3))?;
    let s = &r.system;
    let is_oscillator = t.system_file.is_none() && s.name == "oscillator";
    let mut rng = rng(t.seed);
    let mut rows = Vec::new();
    let mut k11 = None;
    let mut k22 = None;
    for m in 1..=r.m {
        for n in 1..=r.n {
            let ext = s.extension(m, n, &r.kappa)?;
            let ew = s.extended_windows(ext.spec());
            let h = ext.hamiltonian()?;
            let k = ext.first_integral_operator(&ext.gn(&s.g)?)?;
            let zk = bracket_residual(&h, &k, &ew, t.trials, t.tol, &mut rng)?;
            let zl = bracket_residual(&h, ext.lifted_l(), &ew, t.trials, t.tol, &mut rng)?;
            let bound = m as i64 + n as i64 * (1 + s.g.degree()) - 1;
            let mut degree_ok = k.degree() <= bound;
            if is_oscillator && gcd(m, n) == 1 {
                degree_ok &= k.degree() == (m + n - 1) as i64;
            }
            rows.push(SweepRow {
                m,
                n,
                degree: k.degree(),
                bound,
                bracket_k: zk.max_residual,
                bracket_l: zl.max_residual,
                pass: zk.pass && zl.pass && degree_ok,
            });
            match (m, n) {
                (1, 1) => k11 = Some(k),
                (2, 2) => k22 = Some((k, ext, ew)),
                _ => {}
            }
        }
    }

    // K_{2,2} = 2 K_{1,1} (p_x p_u + 2 w^2 x u), checked only for the builtin oscillator.
    let factorization = match (is_oscillator, k11, k22) {
        (true, Some(k11), Some((k22, ext, ew))) => {
            let factor = s.parse_on(
                ext.chart(),
                &format!("p_x*{EXT_MOMENTUM} + 2*omega^2*x*{EXT_COORDINATE}"),
            )?;
            let two = Rational::from_integer(2.into());
            let diff = k22.sub(&k11.lift(ext.chart())?.mul(&factor)?.scale_rational(&two))?;
            let zero = MomentumPoly::zero(ext.chart());
            Some(equal_numeric(&diff, &zero, &ew, t.trials, t.tol, &mut rng)?)
        }
        _ => None,
    };

    let pass = rows.iter().all(|r| r.pass) && factorization.as_ref().is_none_or(|z| z.pass);
    let mut plain = format!(
        "sweep {} m <= {}, n <= {} kappa = {}\n",
        s.name, r.m, r.n, r.kappa
    );
    writeln!(
        plain,
        "{:>3} {:>3} {:>6} {:>6} {:>11} {:>11}  verdict",
        "m", "n", "deg K", "bound", "{H,K}", "{H,L}"
    )
    .unwrap();
    let mut latex = String::from("\\begin{tabular}{rrrrrrl}\n$m$ & $n$ & $\\deg K$ & bound & $\\{H,K\\}$ & $\\{H,L\\}$ & \\\\\n\\hline\n");
    for row in &rows {
        let verdict = if row.pass { "PASS" } else { "FAIL" };
        writeln!(
            plain,
            "{:>3} {:>3} {:>6} {:>6} {:>11.2e} {:>11.2e}  {verdict}",
            row.m, row.n, row.degree, row.bound, row.bracket_k, row.bracket_l
        )
        .unwrap();
        writeln!(
            latex,
            "{} & {} & {} & {} & {:.2e} & {:.2e} & {verdict} \\\\",
            row.m, row.n, row.degree, row.bound, row.bracket_k, row.bracket_l
        )
        .unwrap();
    }
    latex.push_str("\\end{tabular}\n");
    if let Some(z) = &factorization {
        let verdict = if z.pass { "PASS" } else { "FAIL" };
        writeln!(
            plain,
            "K_{{2,2}} - 2 K_{{1,1}} (p_x p_u + 2 omega^2 x u): {:.2e}  {verdict}",
            z.max_residual
        )
        .unwrap();
    }

    let mut json = r.header();
    json["command"] = json!("sweep");
    json["rows"] = serde_json::to_value(&rows).expect("serializable");
    json["factorization"] = match &factorization {
        Some(z) => json!({ "pass": z.pass, "max_residual": z.max_residual }),
        None => Value::Null,
    };
    json["pass"] = json!(pass);
    Ok(Outcome {
        pass,
        plain,
        latex: Some(latex),
        json,
    })
}
