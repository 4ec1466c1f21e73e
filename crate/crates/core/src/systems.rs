//! Builtin systems and the config-file loader.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::{FRAC_PI_2, PI};
use std::path::Path;
use std::sync::Arc;

use num_traits::ToPrimitive;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extension::{
    check_cg, lambda_of, Extension, ExtensionSpec, Lambda, EXT_COORDINATE, EXT_MOMENTUM,
};
use crate::phasespace::{CanonicalChart, Chart, MomentumPoly};
use crate::sampling::{SampleWindow, Windows};
use crate::symexpr::{Expr, Parser, Rational, ZeroReport};

/// Parameter name reserved for the curvature in fixture texts.
pub const KAPPA: &str = "kappa";

const POLE_RADIUS: f64 = 0.1;
const PARAM_WINDOW: (f64, f64) = (0.5, 2.0);
const MOMENTUM_WINDOW: (f64, f64) = (-2.0, 2.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FixtureKind {
    G(u32),
    K { m: u32, n: u32 },
}

/// A printed reference expression, kept as source text.
#[derive(Debug, Clone, PartialEq)]
pub struct Fixture {
    pub label: String,
    pub kind: FixtureKind,
    pub text: String,
    /// `Some(k)` if the expression is only valid at curvature `k`.
    pub kappa: Option<i64>,
    /// Verbatim reproduction of a known typo; expected to disagree.
    pub misprint: bool,
}

impl Fixture {
    fn new(label: &str, kind: FixtureKind, text: &str) -> Self {
        Fixture {
            label: label.into(),
            kind,
            text: text.into(),
            kappa: None,
            misprint: false,
        }
    }

    fn at_kappa(mut self, k: i64) -> Self {
        self.kappa = Some(k);
        self
    }

    fn misprinted(mut self) -> Self {
        self.misprint = true;
        self
    }
}

#[derive(Debug, Clone)]
pub struct SystemDef {
    pub name: String,
    pub chart: Chart,
    pub l: MomentumPoly,
    pub g: MomentumPoly,
    pub c_tilde: Expr,
    pub l0_tilde: Expr,
    pub amplitude: Expr,
    pub parameters: BTreeMap<String, (f64, f64)>,
    /// Windows for chart variables and parameters.
    pub windows: Windows,
    pub fixtures: Vec<Fixture>,
}

impl SystemDef {
    pub fn parser(&self) -> Parser {
        Parser::with_params(self.parameters.keys().map(String::as_str).chain([KAPPA]))
    }

    /// Parses `text` onto `chart`, which is the base chart or an extension of it.
    pub fn parse_on(&self, chart: &Chart, text: &str) -> Result<MomentumPoly> {
        MomentumPoly::from_expr(chart, &self.parser().parse(text)?)
    }

    pub fn parse_poly(&self, text: &str) -> Result<MomentumPoly> {
        self.parse_on(&self.chart, text)
    }

    pub fn lambda(&self) -> Result<Lambda> {
        lambda_of(&self.l, &self.c_tilde, &self.l0_tilde)
    }

    pub fn check_cg(&self, trials: usize, tol: f64, seed: u64) -> Result<ZeroReport> {
        self.check_cg_with(&self.c_tilde, &self.l0_tilde, trials, tol, seed)
    }

    pub fn check_cg_with(
        &self,
        c_tilde: &Expr,
        l0_tilde: &Expr,
        trials: usize,
        tol: f64,
        seed: u64,
    ) -> Result<ZeroReport> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        check_cg(
            &self.l,
            &self.g,
            c_tilde,
            l0_tilde,
            &self.windows,
            trials,
            tol,
            &mut rng,
        )
    }

    /// The extension spec for `(m, n)` with this system's constants.
    pub fn spec(&self, m: u32, n: u32, kappa: &Expr) -> Result<ExtensionSpec> {
        Ok(
            ExtensionSpec::new(m, n, self.c_tilde.clone(), self.l0_tilde.clone())?
                .with_kappa(kappa.clone())
                .with_amplitude(self.amplitude.clone()),
        )
    }

    pub fn extension(&self, m: u32, n: u32, kappa: &Expr) -> Result<Extension> {
        Extension::new(&self.l, self.spec(m, n, kappa)?)
    }

    /// Base windows plus `u` and `p_u` chosen to avoid the zeros of `S_kappa(c u)`.
    pub fn extended_windows(&self, spec: &ExtensionSpec) -> Windows {
        let mut w = self.windows.clone();
        w.insert(
            EXT_MOMENTUM,
            SampleWindow::new(MOMENTUM_WINDOW.0, MOMENTUM_WINDOW.1),
        );
        if spec.is_flat() {
            w.insert(EXT_COORDINATE, SampleWindow::new(-2.0, 2.0));
            return w;
        }
        let c = spec
            .c_tilde
            .as_const()
            .and_then(|c| c.to_f64())
            .map(f64::abs)
            .unwrap_or(1.0);
        let kappa = spec
            .kappa
            .as_const()
            .and_then(|k| k.to_f64())
            .unwrap_or(0.0);
        let mut hi: f64 = 3.0;
        let mut window = SampleWindow::new(0.5, hi).with_pole(0.0, POLE_RADIUS);
        if kappa > 0.0 {
            let zero = PI / (c * kappa.sqrt());
            hi = hi.min(zero - 0.3);
            window = SampleWindow::new(0.5 / c, hi)
                .with_pole(0.0, POLE_RADIUS / c)
                .with_pole(zero, POLE_RADIUS / c);
        }
        w.insert(EXT_COORDINATE, window);
        w
    }

    /// A fixture's text as an expression, with `kappa` replaced by `kappa`.
    pub fn fixture_expr(&self, f: &Fixture, kappa: &Expr) -> Result<Expr> {
        Ok(self.parser().parse(&f.text)?.substitute(KAPPA, kappa))
    }

    pub fn fixture(&self, label: &str) -> Option<&Fixture> {
        self.fixtures
            .iter()
            .find(|f| f.label == label && !f.misprint)
    }

    pub fn misprints(&self) -> impl Iterator<Item = &Fixture> {
        self.fixtures.iter().filter(|f| f.misprint)
    }
}

fn window(lo: f64, hi: f64) -> SampleWindow {
    SampleWindow::new(lo, hi)
}

#[allow(clippy::too_many_arguments)]
fn build(
    name: &str,
    pairs: &[(&str, &str)],
    params: &[&str],
    l: &str,
    g: &str,
    c_tilde: i64,
    l0_tilde: &str,
    coordinate_windows: Vec<(&str, SampleWindow)>,
    fixtures: Vec<Fixture>,
) -> SystemDef {
    let chart = Arc::new(CanonicalChart::new(pairs.iter().copied()).expect("builtin chart"));
    let parser = Parser::with_params(params.iter().copied());
    let poly = |t: &str| MomentumPoly::from_expr(&chart, &parser.parse(t).expect(t)).expect(t);
    let mut windows = Windows::new();
    for (v, w) in coordinate_windows {
        windows.insert(v, w);
    }
    for p in chart.momenta() {
        windows.insert(p, window(MOMENTUM_WINDOW.0, MOMENTUM_WINDOW.1));
    }
    let mut parameters = BTreeMap::new();
    for p in params {
        parameters.insert(p.to_string(), PARAM_WINDOW);
        windows.insert(*p, window(PARAM_WINDOW.0, PARAM_WINDOW.1));
    }
    SystemDef {
        name: name.into(),
        l: poly(l),
        g: poly(g),
        chart: chart.clone(),
        c_tilde: Expr::int(c_tilde),
        l0_tilde: parser.parse(l0_tilde).expect("builtin L0"),
        amplitude: Expr::one(),
        parameters,
        windows,
        fixtures,
    }
}

/// `L = p^2/2 + w^2 x^2` with `G = x`, `c = 0`, `L0 = w^2`, `A = 1`.
pub fn oscillator() -> SystemDef {
    use FixtureKind::*;
    build(
        "oscillator",
        &[("x", "p_x")],
        &["omega"],
        "1/2*p_x^2 + omega^2*x^2",
        "x",
        0,
        "omega^2",
        vec![("x", window(-2.0, 2.0))],
        vec![
            Fixture::new("G1", G(1), "x"),
            Fixture::new("G2", G(2), "2*x*p_x"),
            Fixture::new("G3", G(3), "3*x*p_x^2 - 2*omega^2*x^3"),
            Fixture::new("G4", G(4), "4*x*p_x^3 - 8*omega^2*x^3*p_x"),
            Fixture::new(
                "G5",
                G(5),
                "5*x*p_x^4 - 20*omega^2*x^3*p_x^2 + 4*omega^4*x^5",
            ),
            Fixture::new("K11", K { m: 1, n: 1 }, "x*p_u - u*p_x"),
            Fixture::new(
                "K12",
                K { m: 1, n: 2 },
                "2*x*p_x*p_u - u*(1/2*p_x^2 - omega^2*x^2)",
            ),
            Fixture::new(
                "K22",
                K { m: 2, n: 2 },
                "2*(x*p_u - u*p_x)*(p_x*p_u + 2*omega^2*x*u)",
            ),
            Fixture::new(
                "K32",
                K { m: 3, n: 2 },
                "2*x*p_x*p_u^3 - 9/2*u*p_x^2*p_u^2 + 9*omega^2*x^2*u*p_u^2 \
                 - 27*omega^2*x*u^2*p_x*p_u + 27/4*omega^2*u^3*p_x^2 - 27/2*omega^4*x^2*u^3",
            ),
        ],
    )
}

/// `L = p^2/2 + a / sin^2(phi)` with `G = cos(phi)`, `c = 1`, `L0 = 0`.
pub fn calogero() -> SystemDef {
    use FixtureKind::*;
    let g4 = "sin(4*phi)*p_phi^3 + 8*a*cos(phi)^3/sin(phi)*p_phi";
    build(
        "calogero",
        &[("phi", "p_phi")],
        &["a"],
        "1/2*p_phi^2 + a/sin(phi)^2",
        "cos(phi)",
        1,
        "0",
        vec![(
            "phi",
            window(0.3, PI - 0.3)
                .with_pole(0.0, POLE_RADIUS)
                .with_pole(PI, POLE_RADIUS),
        )],
        vec![
            Fixture::new("G1", G(1), "cos(phi)"),
            Fixture::new("G2", G(2), "-sin(2*phi)*p_phi"),
            Fixture::new(
                "G3",
                G(3),
                "-cos(3*phi)*p_phi^2 - 2*a*cos(phi)^3/sin(phi)^2",
            ),
            Fixture::new("G4", G(4), g4),
            Fixture::new("G4", G(4), &g4.replace("+ 8*a", "- 8*a")).misprinted(),
            Fixture::new(
                "G5",
                G(5),
                "cos(5*phi)*p_phi^4 + 4*a*(6*cos(phi)^2 - 5)*cos(phi)^3/sin(phi)^2*p_phi^2 \
                 + 4*a^2*cos(phi)^5/sin(phi)^4",
            ),
            Fixture::new(
                "K23",
                K { m: 2, n: 3 },
                "-cos(3*phi)*p_u^2*p_phi^2 + 4/(3*u)*sin(phi)*(4*cos(phi)^2 - 1)*p_u*p_phi^3 \
                 + 4*cos(3*phi)/(9*u^2)*p_phi^4 - 2*a*cos(phi)^3/sin(phi)^2*p_u^2 \
                 + 8*a*cos(phi)^2/(u*sin(phi))*p_u*p_phi \
                 + 8*a*(5*cos(phi)^2 - 3)*cos(phi)/(9*u^2*sin(phi)^2)*p_phi^2 \
                 + 16*a^2*cos(phi)^3/(9*u^2*sin(phi)^4)",
            )
            .at_kappa(0),
        ],
    )
}

/// Geodesic flow on the three-sphere plus the compatible potential
/// `sin(xi1) / (cos(xi2) cos(eta) sin(eta))`, with `G = sin(xi2) cos(eta)`.
pub fn three_sphere() -> SystemDef {
    use FixtureKind::*;
    let k12 = "1/Tk(u, kappa)*(-1/2*cos(2*eta)*sin(xi2)^2*p_eta^2 \
               - sin(eta)*cos(xi2)*sin(xi2)/cos(eta)*p_eta*p_xi2 \
               - cos(eta)^2*sin(xi2)^2/(2*sin(eta)^2)*p_xi1^2 \
               + (cos(xi2)^2 - cos(eta)^2*sin(xi2)^2)/(2*cos(eta)^2)*p_xi2^2 \
               - sin(xi2)^2*sin(xi1)*cos(eta)/(sin(eta)*cos(xi2))) \
               - sin(2*eta)*sin(xi2)^2*p_u*p_eta + 2*sin(xi2)*cos(xi2)*p_u*p_xi2";
    build(
        "sphere3",
        &[("eta", "p_eta"), ("xi1", "p_xi1"), ("xi2", "p_xi2")],
        &[],
        "1/2*(p_eta^2 + p_xi1^2/sin(eta)^2 + p_xi2^2/cos(eta)^2) \
         + sin(xi1)/(cos(xi2)*cos(eta)*sin(eta))",
        "sin(xi2)*cos(eta)",
        1,
        "0",
        vec![
            (
                "eta",
                window(0.3, FRAC_PI_2 - 0.3)
                    .with_pole(0.0, POLE_RADIUS)
                    .with_pole(FRAC_PI_2, POLE_RADIUS),
            ),
            ("xi1", window(0.3, PI - 0.3)),
            (
                "xi2",
                window(0.3, FRAC_PI_2 - 0.3).with_pole(FRAC_PI_2, POLE_RADIUS),
            ),
        ],
        vec![
            Fixture::new("G1", G(1), "sin(xi2)*cos(eta)"),
            Fixture::new(
                "G2",
                G(2),
                "-sin(2*eta)*sin(xi2)^2*p_eta + 2*sin(xi2)*cos(xi2)*p_xi2",
            ),
            Fixture::new(
                "G3",
                G(3),
                "-cos(3*eta)*sin(xi2)^3*p_eta^2 - 6*sin(eta)*sin(xi2)^2*cos(xi2)*p_eta*p_xi2 \
                 - cos(eta)^3/sin(eta)^2*sin(xi2)^3*p_xi1^2 \
                 + sin(xi2)*(3*cos(xi2)^2 - cos(eta)^2*sin(xi2)^2)/cos(eta)*p_xi2^2 \
                 - 2*sin(xi2)^3*sin(xi1)*cos(eta)^2/(cos(xi2)*sin(eta))",
            ),
            Fixture::new("K12", K { m: 1, n: 2 }, k12),
            Fixture::new(
                "K12",
                K { m: 1, n: 2 },
                &k12.replace(
                    "- sin(2*eta)*sin(xi2)^2*p_u",
                    "- 2*sin(2*eta)*sin(xi2)^2*p_u",
                ),
            )
            .misprinted(),
        ],
    )
}

pub const BUILTIN_NAMES: &[&str] = &["oscillator", "calogero", "sphere3"];

/// Looks up a builtin by name (`three_sphere` and `three-sphere` alias `sphere3`).
pub fn builtin(name: &str) -> Result<SystemDef> {
    match name {
        "oscillator" => Ok(oscillator()),
        "calogero" => Ok(calogero()),
        "sphere3" | "three_sphere" | "three-sphere" => Ok(three_sphere()),
        _ => Err(Error::UnknownSystem(name.into())),
    }
}

pub fn builtins() -> Vec<SystemDef> {
    BUILTIN_NAMES
        .iter()
        .map(|n| builtin(n).expect("builtin"))
        .collect()
}

/// A number or an expression string in a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ConstValue {
    Int(i64),
    Float(f64),
    Text(String),
}

impl ConstValue {
    fn to_expr(&self, parser: &Parser, key: &str) -> Result<Expr> {
        match self {
            ConstValue::Int(i) => Ok(Expr::int(*i)),
            ConstValue::Float(f) => Rational::from_float(*f)
                .map(Expr::constant)
                .ok_or_else(|| Error::Config(format!("`{key}` is not finite"))),
            ConstValue::Text(t) => Ok(parser.parse(t)?),
        }
    }
}

/// On-disk system description (TOML or JSON).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub name: String,
    pub coordinates: Vec<[String; 2]>,
    #[serde(rename = "L")]
    pub l: String,
    #[serde(rename = "G")]
    pub g: String,
    pub c_tilde: ConstValue,
    #[serde(rename = "L0_tilde")]
    pub l0_tilde: ConstValue,
    #[serde(default)]
    pub parameters: BTreeMap<String, [f64; 2]>,
    #[serde(default)]
    pub windows: BTreeMap<String, [f64; 2]>,
    #[serde(default)]
    pub poles: BTreeMap<String, Vec<f64>>,
    #[serde(default, rename = "A", skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<ConstValue>,
}

/// Trials and tolerance of the CG check run on load.
pub const LOAD_CG_TRIALS: usize = 50;
pub const LOAD_CG_TOL: f64 = 1e-9;
const LOAD_CG_SEED: u64 = 0x5eed;

impl SystemDef {
    pub fn from_config(cfg: &SystemConfig) -> Result<SystemDef> {
        if cfg.coordinates.is_empty() {
            return Err(Error::Config(
                "`coordinates` must list at least one [q, p] pair".into(),
            ));
        }
        let chart = Arc::new(
            CanonicalChart::new(cfg.coordinates.iter().map(|[q, p]| (q.clone(), p.clone())))
                .map_err(|e| Error::Config(e.to_string()))?,
        );
        let reserved = [EXT_COORDINATE, EXT_MOMENTUM, KAPPA];
        for name in chart
            .coordinates()
            .chain(chart.momenta())
            .chain(cfg.parameters.keys().map(String::as_str))
        {
            if reserved.contains(&name) {
                return Err(Error::Config(format!("`{name}` is a reserved name")));
            }
        }
        for p in cfg.parameters.keys() {
            if chart.contains(p) {
                return Err(Error::Config(format!(
                    "parameter `{p}` clashes with a chart name"
                )));
            }
        }
        let parser = Parser::with_params(cfg.parameters.keys().map(String::as_str));
        let known: BTreeSet<String> = chart
            .coordinates()
            .chain(chart.momenta())
            .map(str::to_string)
            .chain(cfg.parameters.keys().cloned())
            .collect();
        let check_symbols = |key: &str, e: &Expr| -> Result<()> {
            match e.free_symbols().into_iter().find(|s| !known.contains(s)) {
                Some(s) => Err(Error::Config(format!(
                    "`{key}` uses undeclared symbol `{s}`"
                ))),
                None => Ok(()),
            }
        };
        let l_expr = parser.parse(&cfg.l)?;
        let g_expr = parser.parse(&cfg.g)?;
        check_symbols("L", &l_expr)?;
        check_symbols("G", &g_expr)?;
        let c_tilde = cfg.c_tilde.to_expr(&parser, "c_tilde")?;
        let l0_tilde = cfg.l0_tilde.to_expr(&parser, "L0_tilde")?;
        let amplitude = match &cfg.amplitude {
            Some(a) => a.to_expr(&parser, "A")?,
            None => Expr::one(),
        };
        for (key, e) in [
            ("c_tilde", &c_tilde),
            ("L0_tilde", &l0_tilde),
            ("A", &amplitude),
        ] {
            check_symbols(key, e)?;
            if e.free_symbols().iter().any(|s| chart.contains(s)) {
                return Err(Error::Config(format!(
                    "`{key}` must not depend on phase-space variables"
                )));
            }
        }

        let mut windows = Windows::new();
        let mut parameters = BTreeMap::new();
        for (p, [lo, hi]) in &cfg.parameters {
            parameters.insert(p.clone(), (*lo, *hi));
            windows.insert(p.clone(), SampleWindow::new(*lo, *hi));
        }
        for q in chart.coordinates() {
            let [lo, hi] = cfg
                .windows
                .get(q)
                .ok_or_else(|| Error::Config(format!("no window for coordinate `{q}`")))?;
            windows.insert(q, SampleWindow::new(*lo, *hi));
        }
        for p in chart.momenta() {
            let [lo, hi] = cfg
                .windows
                .get(p)
                .copied()
                .unwrap_or([MOMENTUM_WINDOW.0, MOMENTUM_WINDOW.1]);
            windows.insert(p, SampleWindow::new(lo, hi));
        }
        if let Some(v) = cfg.windows.keys().find(|v| !chart.contains(v)) {
            return Err(Error::Config(format!(
                "window given for unknown variable `{v}`"
            )));
        }
        for (v, centers) in &cfg.poles {
            let mut w = windows
                .get(v)
                .cloned()
                .ok_or_else(|| Error::Config(format!("pole given for unknown variable `{v}`")))?;
            for c in centers {
                w = w.with_pole(*c, POLE_RADIUS);
            }
            windows.insert(v.clone(), w);
        }
        windows.validate()?;

        let sys = SystemDef {
            name: cfg.name.clone(),
            l: MomentumPoly::from_expr(&chart, &l_expr)?,
            g: MomentumPoly::from_expr(&chart, &g_expr)?,
            chart,
            c_tilde,
            l0_tilde,
            amplitude,
            parameters,
            windows,
            fixtures: Vec::new(),
        };
        let report = sys.check_cg(LOAD_CG_TRIALS, LOAD_CG_TOL, LOAD_CG_SEED)?;
        if !report.pass {
            return Err(Error::CgViolated {
                max_residual: report.max_residual,
            });
        }
        Ok(sys)
    }
}

impl SystemConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }
}

/// Reads a TOML or JSON system file, chosen by extension (`.json` is JSON,
/// anything else TOML), and validates the CG condition.
pub fn load_system(path: impl AsRef<Path>) -> Result<SystemDef> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let cfg = match path.extension().and_then(|e| e.to_str()) {
        Some("json") => SystemConfig::from_json(&text)?,
        _ => SystemConfig::from_toml(&text)?,
    };
    SystemDef::from_config(&cfg)
}
