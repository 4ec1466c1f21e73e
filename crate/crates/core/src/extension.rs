//! (m,n)-extensions: the CG condition, the `G_n` sequence, the extended
//! Hamiltonian and its first integral `K_{m,n}`.
//!
//! Two independent routes exist for both `G_n` (recursion and closed sum) and
//! `K_{m,n}` (operator power and the `P G_n + D X_L(G_n)` form). The operator
//! route is the definitional one; the other is kept for cross-checking.

use std::sync::Arc;

use num_bigint::BigInt;
use rand::Rng;

use crate::error::{Error, Result};
use crate::phasespace::{poisson, xl_apply, CanonicalChart, Chart, MomentumPoly};
use crate::sampling::Windows;
use crate::symexpr::{zero_test, Expr, Rational, ZeroReport};

/// Name of the extension coordinate and its momentum.
pub const EXT_COORDINATE: &str = "u";
pub const EXT_MOMENTUM: &str = "p_u";

/// Parameters selecting a row of the extension table.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtensionSpec {
    pub m: u32,
    pub n: u32,
    pub c_tilde: Expr,
    pub l0_tilde: Expr,
    /// Curvature parameter, consumed only when `c_tilde != 0`.
    pub kappa: Expr,
    /// Amplitude `A`, consumed only when `c_tilde == 0`.
    pub a: Expr,
}

impl ExtensionSpec {
    pub fn new(m: u32, n: u32, c_tilde: Expr, l0_tilde: Expr) -> Result<Self> {
        let spec = ExtensionSpec {
            m,
            n,
            c_tilde,
            l0_tilde,
            kappa: Expr::zero(),
            a: Expr::one(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_kappa(mut self, kappa: Expr) -> Self {
        self.kappa = kappa;
        self
    }

    pub fn with_amplitude(mut self, a: Expr) -> Self {
        self.a = a;
        self
    }

    pub fn is_flat(&self) -> bool {
        self.c_tilde.is_zero()
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 {
            return Err(Error::InvalidSpec(format!(
                "m and n must be positive, got ({}, {})",
                self.m, self.n
            )));
        }
        for (label, e) in [("c_tilde", &self.c_tilde), ("L0_tilde", &self.l0_tilde)] {
            if e.free_symbols().contains(EXT_COORDINATE) {
                return Err(Error::InvalidSpec(format!(
                    "{label} depends on {EXT_COORDINATE}"
                )));
            }
        }
        if !self.is_flat() && !self.l0_tilde.is_zero() {
            return Err(Error::InvalidSpec(
                "c_tilde != 0 requires L0_tilde = 0 (the table sets beta = 0 on that branch)"
                    .into(),
            ));
        }
        if self.is_flat() && self.a.is_zero() {
            return Err(Error::InvalidSpec("amplitude A must be nonzero".into()));
        }
        Ok(())
    }

    /// `m / n^2` as an exact constant.
    fn operator_weight(&self) -> Rational {
        Rational::new(
            BigInt::from(self.m),
            BigInt::from(self.n) * BigInt::from(self.n),
        )
    }

    fn ratio(&self) -> Rational {
        Rational::new(BigInt::from(self.m), BigInt::from(self.n))
    }
}

/// `alpha(u)`, `beta(u)`, `gamma(u)` for the active branch.
#[derive(Debug, Clone, PartialEq)]
pub struct TableOneFunctions {
    pub alpha_tilde: Expr,
    pub beta_tilde: Expr,
    pub gamma_tilde: Expr,
}

impl TableOneFunctions {
    pub fn new(spec: &ExtensionSpec) -> Self {
        let u = Expr::var(EXT_COORDINATE);
        if spec.is_flat() {
            let a = spec.a.clone();
            TableOneFunctions {
                alpha_tilde: a.clone(),
                beta_tilde: spec.l0_tilde.clone() * a.powi(2) * u.powi(2),
                gamma_tilde: -(a * u),
            }
        } else {
            let c = spec.c_tilde.clone();
            let arg = c.clone() * u;
            let s = Expr::tag_s(arg.clone(), spec.kappa.clone());
            let cc = Expr::tag_c(arg, spec.kappa.clone());
            TableOneFunctions {
                alpha_tilde: c * s.powi(-2),
                beta_tilde: Expr::zero(),
                gamma_tilde: cc * s.powi(-1),
            }
        }
    }

    /// `(alpha + gamma', beta - L0 gamma^2)`, both identically zero.
    pub fn relation_residuals(&self, l0_tilde: &Expr) -> (Expr, Expr) {
        let a = (self.alpha_tilde.clone() + self.gamma_tilde.diff(EXT_COORDINATE)).normal_form();
        let b =
            (self.beta_tilde.clone() - l0_tilde.clone() * self.gamma_tilde.powi(2)).normal_form();
        (a, b)
    }
}

/// `-2 (c L + L0)`, annihilated by `X_L`.
#[derive(Debug, Clone, PartialEq)]
pub struct Lambda(pub MomentumPoly);

impl Lambda {
    pub fn poly(&self) -> &MomentumPoly {
        &self.0
    }

    pub fn to_expr(&self) -> Expr {
        self.0.to_expr()
    }
}

pub fn lambda_of(l: &MomentumPoly, c_tilde: &Expr, l0_tilde: &Expr) -> Result<Lambda> {
    let chart = l.chart();
    let cl = l.scale(c_tilde)?;
    let l0 = MomentumPoly::constant(chart, l0_tilde)?;
    let minus_two = Rational::from_integer((-2).into());
    Ok(Lambda(cl.add(&l0)?.scale_rational(&minus_two)))
}

/// `X_L^2(G) + 2 (c L + L0) G`.
pub fn cg_residual(
    l: &MomentumPoly,
    g: &MomentumPoly,
    c_tilde: &Expr,
    l0_tilde: &Expr,
) -> Result<MomentumPoly> {
    let lam = lambda_of(l, c_tilde, l0_tilde)?;
    let x2 = xl_apply(l, &xl_apply(l, g)?)?;
    x2.sub(&lam.0.mul(g)?)
}

#[allow(clippy::too_many_arguments)]
pub fn check_cg<R: Rng + ?Sized>(
    l: &MomentumPoly,
    g: &MomentumPoly,
    c_tilde: &Expr,
    l0_tilde: &Expr,
    windows: &Windows,
    trials: usize,
    tol: f64,
    rng: &mut R,
) -> Result<ZeroReport> {
    let r = cg_residual(l, g, c_tilde, l0_tilde)?;
    Ok(zero_test(&r, windows, trials, tol, rng)?)
}

/// `X_L^2(G_n) - n^2 Lambda G_n`, identically zero when `G` satisfies CG.
pub fn theorem_residual(
    l: &MomentumPoly,
    g_n: &MomentumPoly,
    lambda: &Lambda,
    n: u32,
) -> Result<MomentumPoly> {
    let x2 = xl_apply(l, &xl_apply(l, g_n)?)?;
    let n2 = Rational::from_integer(BigInt::from(n) * BigInt::from(n));
    x2.sub(&lambda.0.mul(g_n)?.scale_rational(&n2))
}

/// `G_1, ..., G_n` by `G_{k+1} = X_L(G) G_k + (1/k) G X_L(G_k)`.
pub fn gn_sequence(l: &MomentumPoly, g: &MomentumPoly, n: u32) -> Result<Vec<MomentumPoly>> {
    if n == 0 {
        return Err(Error::InvalidSpec("n must be positive".into()));
    }
    let xg = xl_apply(l, g)?;
    let mut out = vec![g.clone()];
    for k in 1..n {
        let gk = out.last().expect("nonempty");
        let first = xg.mul(gk)?;
        let second = g
            .mul(&xl_apply(l, gk)?)?
            .scale_rational(&Rational::new(1.into(), k.into()));
        out.push(first.add(&second)?);
    }
    Ok(out)
}

pub fn gn_recursive(l: &MomentumPoly, g: &MomentumPoly, n: u32) -> Result<MomentumPoly> {
    Ok(gn_sequence(l, g, n)?.pop().expect("nonempty"))
}

fn binomial(n: u32, k: u32) -> Rational {
    let mut acc = BigInt::from(1);
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    Rational::from_integer(acc)
}

/// `G_n = sum_k C(n, 2k+1) Lambda^k G^{2k+1} X_L(G)^{n-2k-1}`.
pub fn gn_closed(
    l: &MomentumPoly,
    g: &MomentumPoly,
    lambda: &Lambda,
    n: u32,
) -> Result<MomentumPoly> {
    if n == 0 {
        return Err(Error::InvalidSpec("n must be positive".into()));
    }
    let xg = xl_apply(l, g)?;
    let mut acc = MomentumPoly::zero(l.chart());
    for k in 0..=(n - 1) / 2 {
        let term = lambda
            .0
            .pow(k)
            .mul(&g.pow(2 * k + 1))?
            .mul(&xg.pow(n - 2 * k - 1))?
            .scale_rational(&binomial(n, 2 * k + 1));
        acc = acc.add(&term)?;
    }
    Ok(acc)
}

/// The data shared by every object living on the extended chart `Q x (u, p_u)`.
#[derive(Debug, Clone)]
pub struct Extension {
    spec: ExtensionSpec,
    table: TableOneFunctions,
    base_chart: Chart,
    chart: Chart,
    base_l: MomentumPoly,
    l: MomentumPoly,
    lambda: Lambda,
}

impl Extension {
    pub fn new(l: &MomentumPoly, spec: ExtensionSpec) -> Result<Self> {
        spec.validate()?;
        let base_chart = l.chart().clone();
        let chart: Chart = Arc::new(base_chart.extended(EXT_COORDINATE, EXT_MOMENTUM)?);
        let lambda = lambda_of(l, &spec.c_tilde, &spec.l0_tilde)?;
        Ok(Extension {
            table: TableOneFunctions::new(&spec),
            l: l.lift(&chart)?,
            base_l: l.clone(),
            base_chart,
            chart,
            lambda,
            spec,
        })
    }

    pub fn spec(&self) -> &ExtensionSpec {
        &self.spec
    }

    pub fn table(&self) -> &TableOneFunctions {
        &self.table
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn base_chart(&self) -> &CanonicalChart {
        &self.base_chart
    }

    pub fn lambda(&self) -> &Lambda {
        &self.lambda
    }

    /// `L` on the extended chart.
    pub fn lifted_l(&self) -> &MomentumPoly {
        &self.l
    }

    pub fn lift(&self, f: &MomentumPoly) -> Result<MomentumPoly> {
        f.lift(&self.chart)
    }

    pub fn gn(&self, g: &MomentumPoly) -> Result<MomentumPoly> {
        gn_recursive(&self.base_l, g, self.spec.n)
    }

    /// `H = p_u^2/2 + (m/n)^2 (alpha L + beta)`.
    pub fn hamiltonian(&self) -> Result<MomentumPoly> {
        let pu = MomentumPoly::momentum(&self.chart, EXT_MOMENTUM)?;
        let half = Rational::new(1.into(), 2.into());
        let r2 = self.spec.ratio() * self.spec.ratio();
        let potential = self
            .l
            .scale(&self.table.alpha_tilde)?
            .add(&MomentumPoly::constant(
                &self.chart,
                &self.table.beta_tilde,
            )?)?
            .scale_rational(&r2);
        pu.pow(2).scale_rational(&half).add(&potential)
    }

    /// One application of `U = p_u + (m/n^2) gamma X_L`.
    pub fn apply_u(&self, f: &MomentumPoly) -> Result<MomentumPoly> {
        let pu = MomentumPoly::momentum(&self.chart, EXT_MOMENTUM)?;
        let weight = Expr::constant(self.spec.operator_weight()) * self.table.gamma_tilde.clone();
        pu.mul(f)?.add(&xl_apply(&self.l, f)?.scale(&weight)?)
    }

    /// `K = U^m(G_n)`, with `g_n` given on the base chart.
    pub fn first_integral_operator(&self, g_n: &MomentumPoly) -> Result<MomentumPoly> {
        let mut acc = self.lift(g_n)?;
        for _ in 0..self.spec.m {
            acc = self.apply_u(&acc)?;
        }
        Ok(acc)
    }

    /// `(P, D)` with `K = P G_n + D X_L(G_n)`.
    pub fn pd_coefficients(&self) -> Result<(MomentumPoly, MomentumPoly)> {
        let m = self.spec.m;
        let pu = MomentumPoly::momentum(&self.chart, EXT_MOMENTUM)?;
        let g = MomentumPoly::constant(
            &self.chart,
            &(Expr::constant(self.spec.ratio()) * self.table.gamma_tilde.clone()),
        )?;
        let lam = self.lambda.0.lift(&self.chart)?;
        let mut p = MomentumPoly::zero(&self.chart);
        for k in 0..=m / 2 {
            let t = g
                .pow(2 * k)
                .mul(&pu.pow(m - 2 * k))?
                .mul(&lam.pow(k))?
                .scale_rational(&binomial(m, 2 * k));
            p = p.add(&t)?;
        }
        let mut d = MomentumPoly::zero(&self.chart);
        for k in 0..=(m - 1) / 2 {
            let t = g
                .pow(2 * k + 1)
                .mul(&pu.pow(m - 2 * k - 1))?
                .mul(&lam.pow(k))?
                .scale_rational(&binomial(m, 2 * k + 1));
            d = d.add(&t)?;
        }
        let d = d.scale_rational(&Rational::new(1.into(), self.spec.n.into()));
        Ok((p, d))
    }

    pub fn first_integral_pd(&self, g_n: &MomentumPoly) -> Result<MomentumPoly> {
        let (p, d) = self.pd_coefficients()?;
        let gn = self.lift(g_n)?;
        let xgn = xl_apply(&self.l, &gn)?;
        p.mul(&gn)?.add(&d.mul(&xgn)?)
    }

    /// `{H, K}` on the extended chart.
    pub fn bracket_with_h(&self, k: &MomentumPoly) -> Result<MomentumPoly> {
        poisson(&self.hamiltonian()?, k)
    }
}

pub fn extended_hamiltonian(l: &MomentumPoly, spec: &ExtensionSpec) -> Result<MomentumPoly> {
    Extension::new(l, spec.clone())?.hamiltonian()
}

pub fn first_integral_operator(
    l: &MomentumPoly,
    spec: &ExtensionSpec,
    g_n: &MomentumPoly,
) -> Result<MomentumPoly> {
    Extension::new(l, spec.clone())?.first_integral_operator(g_n)
}

pub fn first_integral_pd(
    l: &MomentumPoly,
    spec: &ExtensionSpec,
    g_n: &MomentumPoly,
) -> Result<MomentumPoly> {
    Extension::new(l, spec.clone())?.first_integral_pd(g_n)
}
