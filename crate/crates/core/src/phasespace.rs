//! Phase-space functions polynomial in the momenta, the canonical Poisson bracket
//! and the Hamiltonian vector field.
//!
//! Bracket convention: `{f, g} = sum_i (df/dq_i dg/dp_i - df/dp_i dg/dq_i)`, and
//! `X_L(f) = {f, L}`. With `L = p^2/2 + w^2 x^2` this gives
//! `X_L = p d/dx - 2 w^2 x d/dp`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use num_traits::{One, Zero};
use rand::Rng;

use crate::error::{Error, Result};
use crate::sampling::Windows;
use crate::symexpr::{zero_test, Bindings, EvalError, Evaluate, Expr, Laurent, Node, ZeroReport};

/// Ordered canonical pairs `(coordinate, momentum)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalChart {
    pairs: Vec<(String, String)>,
}

impl CanonicalChart {
    pub fn new<I, A, B>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (A, B)>,
        A: Into<String>,
        B: Into<String>,
    {
        let pairs: Vec<(String, String)> = pairs
            .into_iter()
            .map(|(q, p)| (q.into(), p.into()))
            .collect();
        if pairs.is_empty() {
            return Err(Error::InvalidChart("chart has no canonical pairs".into()));
        }
        let mut seen = BTreeSet::new();
        for (q, p) in &pairs {
            for name in [q, p] {
                if !seen.insert(name.clone()) {
                    return Err(Error::InvalidChart(format!("name `{name}` appears twice")));
                }
            }
        }
        Ok(CanonicalChart { pairs })
    }

    pub fn pairs(&self) -> &[(String, String)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn coordinates(&self) -> impl Iterator<Item = &str> {
        self.pairs.iter().map(|(q, _)| q.as_str())
    }

    pub fn momenta(&self) -> impl Iterator<Item = &str> {
        self.pairs.iter().map(|(_, p)| p.as_str())
    }

    pub fn momentum_index(&self, name: &str) -> Option<usize> {
        self.pairs.iter().position(|(_, p)| p == name)
    }

    pub fn coordinate_index(&self, name: &str) -> Option<usize> {
        self.pairs.iter().position(|(q, _)| q == name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.pairs.iter().any(|(q, p)| q == name || p == name)
    }

    /// This chart with `(coordinate, momentum)` appended.
    pub fn extended(&self, coordinate: &str, momentum: &str) -> Result<Self> {
        let mut pairs = self.pairs.clone();
        pairs.push((coordinate.into(), momentum.into()));
        CanonicalChart::new(pairs)
    }
}

pub type Chart = Arc<CanonicalChart>;

/// Sparse polynomial in the chart's momenta with coefficients depending on
/// coordinates and parameters only. Coefficients are kept expanded, with even
/// cosine powers eliminated, and no stored coefficient is zero.
#[derive(Clone)]
pub struct MomentumPoly {
    chart: Chart,
    terms: BTreeMap<Vec<u32>, Laurent>,
}

impl PartialEq for MomentumPoly {
    fn eq(&self, other: &Self) -> bool {
        (Arc::ptr_eq(&self.chart, &other.chart) || self.chart == other.chart)
            && self.terms == other.terms
    }
}

impl fmt::Debug for MomentumPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MomentumPoly({})", self.to_expr())
    }
}

impl fmt::Display for MomentumPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_expr())
    }
}

fn same_chart(a: &Chart, b: &Chart) -> Result<()> {
    if Arc::ptr_eq(a, b) || a == b {
        Ok(())
    } else {
        Err(Error::ChartMismatch(format!(
            "{:?} vs {:?}",
            a.pairs, b.pairs
        )))
    }
}

/// Coefficient monomials of one momentum monomial, before they are reassembled.
type CoefficientTerms = BTreeMap<Vec<(Expr, i64)>, crate::symexpr::Rational>;

impl MomentumPoly {
    pub fn zero(chart: &Chart) -> Self {
        MomentumPoly {
            chart: chart.clone(),
            terms: BTreeMap::new(),
        }
    }

    fn from_terms(chart: &Chart, terms: BTreeMap<Vec<u32>, Laurent>) -> Self {
        let terms = terms
            .into_iter()
            .filter_map(|(k, v)| {
                let v = v.reduce_pythagorean();
                (!v.is_zero()).then_some((k, v))
            })
            .collect();
        MomentumPoly {
            chart: chart.clone(),
            terms,
        }
    }

    /// Splits an expression into momentum monomials. Fails if a momentum appears
    /// with a negative power or inside a non-polynomial function.
    pub fn from_expr(chart: &Chart, e: &Expr) -> Result<Self> {
        let expanded = Laurent::from_expr(e, true);
        let mut terms: BTreeMap<Vec<u32>, CoefficientTerms> = BTreeMap::new();
        for (mono, c) in expanded.iter() {
            let mut idx = vec![0u32; chart.len()];
            let mut rest = Vec::with_capacity(mono.len());
            for (atom, k) in mono {
                if let Node::Var(name) = atom.node() {
                    if let Some(i) = chart.momentum_index(name) {
                        if *k < 0 {
                            return Err(Error::NegativeMomentumPower(name.clone()));
                        }
                        idx[i] = *k as u32;
                        continue;
                    }
                }
                if let Some(p) = chart.momenta().find(|p| atom.contains_symbol(p)) {
                    return Err(Error::NotPolynomial(format!("{atom} (contains {p})")));
                }
                rest.push((atom.clone(), *k));
            }
            let slot = terms.entry(idx).or_default();
            let entry = slot
                .entry(rest)
                .or_insert_with(crate::symexpr::Rational::zero);
            *entry += c;
        }
        let terms = terms
            .into_iter()
            .map(|(k, m)| (k, Laurent::from_monomials(m)))
            .collect();
        Ok(MomentumPoly::from_terms(chart, terms))
    }

    /// A momentum-free function (coefficient only).
    pub fn constant(chart: &Chart, e: &Expr) -> Result<Self> {
        MomentumPoly::from_expr(chart, e)
    }

    pub fn one(chart: &Chart) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(vec![0; chart.len()], Laurent::one());
        MomentumPoly {
            chart: chart.clone(),
            terms,
        }
    }

    /// The momentum named `name` as a degree-one polynomial.
    pub fn momentum(chart: &Chart, name: &str) -> Result<Self> {
        let i = chart
            .momentum_index(name)
            .ok_or_else(|| Error::ChartMismatch(format!("`{name}` is not a momentum")))?;
        let mut idx = vec![0; chart.len()];
        idx[i] = 1;
        let mut terms = BTreeMap::new();
        terms.insert(idx, Laurent::one());
        Ok(MomentumPoly {
            chart: chart.clone(),
            terms,
        })
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Maximum total momentum degree; `-1` for the zero polynomial.
    pub fn degree(&self) -> i64 {
        self.terms
            .keys()
            .map(|k| k.iter().map(|e| *e as i64).sum())
            .max()
            .unwrap_or(-1)
    }

    /// Number of stored (momentum monomial, coefficient monomial) pairs.
    pub fn size(&self) -> usize {
        self.terms.values().map(Laurent::len).sum()
    }

    pub fn coefficient(&self, exponents: &[u32]) -> Option<Expr> {
        self.terms.get(exponents).map(Laurent::to_expr)
    }

    /// `(exponent vector, coefficient)` pairs in ascending exponent order.
    pub fn terms(&self) -> impl Iterator<Item = (&[u32], Expr)> {
        self.terms.iter().map(|(k, v)| (k.as_slice(), v.to_expr()))
    }

    fn monomial_expr(&self, idx: &[u32]) -> Expr {
        Expr::product(
            self.chart
                .momenta()
                .zip(idx)
                .map(|(p, e)| Expr::pow(Expr::var(p), *e as i64)),
        )
    }

    pub fn to_expr(&self) -> Expr {
        Expr::sum(
            self.terms
                .iter()
                .map(|(k, v)| v.to_expr() * self.monomial_expr(k)),
        )
    }

    pub fn add(&self, other: &MomentumPoly) -> Result<MomentumPoly> {
        same_chart(&self.chart, &other.chart)?;
        let mut terms = self.terms.clone();
        for (k, v) in &other.terms {
            terms.entry(k.clone()).or_default().add_assign(v);
        }
        Ok(MomentumPoly::from_terms(&self.chart, terms))
    }

    pub fn sub(&self, other: &MomentumPoly) -> Result<MomentumPoly> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> MomentumPoly {
        MomentumPoly {
            chart: self.chart.clone(),
            terms: self
                .terms
                .iter()
                .map(|(k, v)| (k.clone(), v.neg()))
                .collect(),
        }
    }

    pub fn mul(&self, other: &MomentumPoly) -> Result<MomentumPoly> {
        same_chart(&self.chart, &other.chart)?;
        let mut terms: BTreeMap<Vec<u32>, Laurent> = BTreeMap::new();
        for (ka, va) in &self.terms {
            for (kb, vb) in &other.terms {
                let k: Vec<u32> = ka.iter().zip(kb).map(|(a, b)| a + b).collect();
                terms.entry(k).or_default().add_assign(&va.mul(vb));
            }
        }
        Ok(MomentumPoly::from_terms(&self.chart, terms))
    }

    pub fn pow(&self, k: u32) -> MomentumPoly {
        let mut acc = MomentumPoly::one(&self.chart);
        for _ in 0..k {
            acc = acc.mul(self).expect("same chart");
        }
        acc
    }

    /// Multiplies every coefficient by a momentum-free expression.
    pub fn scale(&self, factor: &Expr) -> Result<MomentumPoly> {
        self.mul(&MomentumPoly::constant(&self.chart, factor)?)
    }

    pub fn scale_rational(&self, c: &crate::symexpr::Rational) -> MomentumPoly {
        if c.is_zero() {
            return MomentumPoly::zero(&self.chart);
        }
        if c.is_one() {
            return self.clone();
        }
        MomentumPoly {
            chart: self.chart.clone(),
            terms: self
                .terms
                .iter()
                .map(|(k, v)| (k.clone(), v.scale(c)))
                .collect(),
        }
    }

    /// Partial derivative in any chart variable or parameter.
    pub fn diff(&self, name: &str) -> MomentumPoly {
        if let Some(i) = self.chart.momentum_index(name) {
            let mut terms = BTreeMap::new();
            for (k, v) in &self.terms {
                if k[i] == 0 {
                    continue;
                }
                let mut k2 = k.clone();
                k2[i] -= 1;
                let c = crate::symexpr::Rational::from_integer(k[i].into());
                terms.insert(k2, v.scale(&c));
            }
            return MomentumPoly {
                chart: self.chart.clone(),
                terms,
            };
        }
        let terms = self
            .terms
            .iter()
            .filter(|(_, v)| v.contains_symbol(name))
            .map(|(k, v)| (k.clone(), v.diff(name, true)))
            .collect();
        MomentumPoly::from_terms(&self.chart, terms)
    }

    /// Re-expresses `self` on a chart containing all of its momenta by name.
    pub fn lift(&self, target: &Chart) -> Result<MomentumPoly> {
        if Arc::ptr_eq(&self.chart, target) {
            return Ok(self.clone());
        }
        let map: Vec<usize> = self
            .chart
            .momenta()
            .map(|p| {
                target.momentum_index(p).ok_or_else(|| {
                    Error::ChartMismatch(format!("momentum `{p}` missing from target chart"))
                })
            })
            .collect::<Result<_>>()?;
        let terms = self
            .terms
            .iter()
            .map(|(k, v)| {
                let mut k2 = vec![0; target.len()];
                for (i, e) in k.iter().enumerate() {
                    k2[map[i]] = *e;
                }
                (k2, v.clone())
            })
            .collect();
        Ok(MomentumPoly {
            chart: target.clone(),
            terms,
        })
    }

    pub fn free_symbols(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for (k, v) in &self.terms {
            for (p, e) in self.chart.momenta().zip(k) {
                if *e > 0 {
                    out.insert(p.to_string());
                }
            }
            for (m, _) in v.iter() {
                for (a, _) in m {
                    a.collect_symbols(&mut out);
                }
            }
        }
        out
    }

    pub fn eval(&self, b: &Bindings) -> Result<f64, EvalError> {
        self.eval_scaled(b).map(|(v, _)| v)
    }

    /// Renders with momentum monomials ordered by descending total degree, then
    /// lexicographically by exponent vector (descending).
    pub fn to_latex(&self) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let mut keys: Vec<&Vec<u32>> = self.terms.keys().collect();
        keys.sort_by(|a, b| {
            let da: u32 = a.iter().sum();
            let db: u32 = b.iter().sum();
            db.cmp(&da).then_with(|| b.cmp(a))
        });
        let mut out = String::new();
        for (i, k) in keys.into_iter().enumerate() {
            let coeff = self.terms[k].to_expr();
            let mono: Vec<String> = self
                .chart
                .momenta()
                .zip(k)
                .filter(|(_, e)| **e > 0)
                .map(|(p, e)| {
                    let s = crate::symexpr::latex_symbol(p);
                    if *e == 1 {
                        s
                    } else {
                        format!("{s}^{{{e}}}")
                    }
                })
                .collect();
            let mono = mono.join(" ");
            let (negative, body) = match coeff.additive_terms().len() {
                1 => {
                    let (c, _) = coeff.coefficient_split();
                    if c < Zero::zero() {
                        (true, (-&coeff).to_latex())
                    } else {
                        (false, coeff.to_latex())
                    }
                }
                _ => (false, format!("\\left({}\\right)", coeff.to_latex())),
            };
            let body = match (body.as_str(), mono.is_empty()) {
                (_, true) => body,
                ("1", false) => mono,
                _ => format!("{body}\\, {mono}"),
            };
            match (i, negative) {
                (0, true) => out.push_str(&format!("-{body}")),
                (0, false) => out.push_str(&body),
                (_, true) => out.push_str(&format!(" - {body}")),
                (_, false) => out.push_str(&format!(" + {body}")),
            }
        }
        out
    }
}

impl Evaluate for MomentumPoly {
    fn eval_scaled(&self, b: &Bindings) -> Result<(f64, f64), EvalError> {
        let pvals: Vec<(&str, Option<f64>)> = self.chart.momenta().map(|p| (p, b.get(p))).collect();
        let mut cache = HashMap::new();
        let mut total = 0.0;
        let mut scale: f64 = 0.0;
        for (k, v) in &self.terms {
            let mut pm = 1.0;
            for ((p, x), e) in pvals.iter().zip(k) {
                if *e > 0 {
                    let x = x.ok_or_else(|| EvalError::Unbound(p.to_string()))?;
                    pm *= x.powi(*e as i32);
                }
            }
            for (m, c) in v.iter() {
                let t = Laurent::eval_monomial(m, c, b, &mut cache)? * pm;
                total += t;
                scale = scale.max(t.abs());
            }
        }
        Ok((total, scale))
    }

    fn symbols(&self) -> BTreeSet<String> {
        self.free_symbols()
    }
}

/// Canonical Poisson bracket `{f, g}`.
pub fn poisson(f: &MomentumPoly, g: &MomentumPoly) -> Result<MomentumPoly> {
    same_chart(&f.chart, &g.chart)?;
    let chart = f.chart.clone();
    let mut acc = MomentumPoly::zero(&chart);
    for (q, p) in chart.pairs() {
        let fq = f.diff(q);
        let gp = g.diff(p);
        if !fq.is_zero() && !gp.is_zero() {
            acc = acc.add(&fq.mul(&gp)?)?;
        }
        let fp = f.diff(p);
        let gq = g.diff(q);
        if !fp.is_zero() && !gq.is_zero() {
            acc = acc.sub(&fp.mul(&gq)?)?;
        }
    }
    Ok(acc)
}

/// The Hamiltonian vector field of `l` applied to `f`: `X_L(f) = {f, L}`.
pub fn xl_apply(l: &MomentumPoly, f: &MomentumPoly) -> Result<MomentumPoly> {
    poisson(f, l)
}

/// `X_L^k(f)`.
pub fn xl_iterate(l: &MomentumPoly, f: &MomentumPoly, k: usize) -> Result<MomentumPoly> {
    let mut acc = f.clone();
    for _ in 0..k {
        acc = xl_apply(l, &acc)?;
    }
    Ok(acc)
}

/// Random-point comparison of two polynomials on the same chart.
pub fn equal_numeric<R: Rng + ?Sized>(
    f: &MomentumPoly,
    g: &MomentumPoly,
    windows: &Windows,
    trials: usize,
    tol: f64,
    rng: &mut R,
) -> Result<ZeroReport> {
    let d = f.sub(g)?;
    Ok(zero_test(&d, windows, trials, tol, rng)?)
}

/// `degree` as a free function, `-1` for zero.
pub fn degree(f: &MomentumPoly) -> i64 {
    f.degree()
}
