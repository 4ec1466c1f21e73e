//! Immutable symbolic expressions over coordinates, momenta and named parameters.
//!
//! Every constructor canonicalizes: sums and products are flattened, constants are
//! folded exactly, like terms are collected and integer powers merged. Operands of
//! sums and products are kept sorted by the structural order of [`Node`], so two
//! expressions built from the same pieces compare equal structurally.
//!
//! The curvature-tagged functions `S_k` and `C_k` are first-class nodes. `T_k` is not:
//! it is always stored as `S_k * C_k^-1`.

mod diff;
mod eval;
mod laurent;
mod parse;
mod print;
mod zero;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

pub use eval::{tagged_cos, tagged_sin, Bindings, EvalError};
pub(crate) use laurent::Laurent;
pub use parse::{parse, ParseError, Parser};
pub use print::latex_symbol;
pub use zero::{is_zero_probabilistic, zero_test, Evaluate, ZeroReport};

/// Exact rational constant.
pub type Rational = BigRational;

/// One node of an expression tree.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Node {
    Const(Rational),
    Param(String),
    Var(String),
    Sum(Vec<Expr>),
    Product(Vec<Expr>),
    /// Integer power; the exponent is never 0 or 1.
    Pow(Expr, i64),
    Sin(Expr),
    Cos(Expr),
    Sinh(Expr),
    Cosh(Expr),
    /// `S_k(argument)` with the curvature as second field.
    TagS(Expr, Expr),
    /// `C_k(argument)` with the curvature as second field.
    TagC(Expr, Expr),
}

/// A shared, immutable, canonical expression.
#[derive(Clone)]
pub struct Expr(Arc<Node>);

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || *self.0 == *other.0
    }
}

impl Eq for Expr {}

impl PartialOrd for Expr {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Expr {
    fn cmp(&self, other: &Self) -> Ordering {
        if Arc::ptr_eq(&self.0, &other.0) {
            Ordering::Equal
        } else {
            self.0.cmp(&other.0)
        }
    }
}

impl Hash for Expr {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.hash(state)
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

impl Expr {
    fn raw(node: Node) -> Expr {
        Expr(Arc::new(node))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub(crate) fn ptr_key(&self) -> usize {
        Arc::as_ptr(&self.0) as usize
    }

    pub fn constant(value: Rational) -> Expr {
        Expr::raw(Node::Const(value))
    }

    pub fn int(value: i64) -> Expr {
        Expr::constant(rat(value))
    }

    /// `numer / denom` as an exact constant. Panics on a zero denominator.
    pub fn rational(numer: i64, denom: i64) -> Expr {
        Expr::constant(Rational::new(BigInt::from(numer), BigInt::from(denom)))
    }

    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    pub fn var(name: impl Into<String>) -> Expr {
        Expr::raw(Node::Var(name.into()))
    }

    pub fn param(name: impl Into<String>) -> Expr {
        Expr::raw(Node::Param(name.into()))
    }

    pub fn as_const(&self) -> Option<&Rational> {
        match self.node() {
            Node::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const().is_some_and(Zero::is_zero)
    }

    pub fn is_one(&self) -> bool {
        self.as_const().is_some_and(One::is_one)
    }

    /// Name of a `Var` or `Param` leaf.
    pub fn symbol_name(&self) -> Option<&str> {
        match self.node() {
            Node::Var(n) | Node::Param(n) => Some(n),
            _ => None,
        }
    }

    pub fn sum<I: IntoIterator<Item = Expr>>(terms: I) -> Expr {
        let mut constant = Rational::zero();
        let mut groups: BTreeMap<Vec<Expr>, Rational> = BTreeMap::new();
        let mut pending: Vec<Expr> = terms.into_iter().collect();
        while let Some(t) = pending.pop() {
            match t.node() {
                Node::Sum(inner) => pending.extend(inner.iter().cloned()),
                Node::Const(c) => constant += c,
                _ => {
                    let (c, rest) = t.split_coefficient();
                    *groups.entry(rest).or_insert_with(Rational::zero) += c;
                }
            }
        }
        let mut out = Vec::with_capacity(groups.len() + 1);
        if !constant.is_zero() {
            out.push(Expr::constant(constant));
        }
        for (rest, c) in groups {
            if !c.is_zero() {
                out.push(Expr::scaled_factors(c, rest));
            }
        }
        out.sort();
        match out.len() {
            0 => Expr::zero(),
            1 => out.pop().unwrap(),
            _ => Expr::raw(Node::Sum(out)),
        }
    }

    pub fn product<I: IntoIterator<Item = Expr>>(factors: I) -> Expr {
        let mut coeff = Rational::one();
        let mut powers: BTreeMap<Expr, i64> = BTreeMap::new();
        let mut pending: Vec<Expr> = factors.into_iter().collect();
        while let Some(f) = pending.pop() {
            match f.node() {
                Node::Product(inner) => pending.extend(inner.iter().cloned()),
                Node::Const(c) => coeff *= c,
                Node::Pow(b, e) if !b.is_zero() => *powers.entry(b.clone()).or_insert(0) += e,
                _ => *powers.entry(f).or_insert(0) += 1,
            }
        }
        if coeff.is_zero() {
            return Expr::zero();
        }
        let mut out = Vec::with_capacity(powers.len() + 1);
        for (base, e) in powers {
            if e == 0 {
                continue;
            }
            let p = Expr::pow(base, e);
            match p.node() {
                Node::Const(c) => coeff *= c,
                Node::Product(inner) => out.extend(inner.iter().cloned()),
                _ => out.push(p),
            }
        }
        if coeff.is_zero() {
            return Expr::zero();
        }
        out.sort();
        if !coeff.is_one() || out.is_empty() {
            out.insert(0, Expr::constant(coeff));
        }
        match out.len() {
            1 => out.pop().unwrap(),
            _ => Expr::raw(Node::Product(out)),
        }
    }

    pub fn pow(base: Expr, exponent: i64) -> Expr {
        match exponent {
            0 => return Expr::one(),
            1 => return base,
            _ => {}
        }
        match base.node() {
            Node::Const(c) => {
                if c.is_zero() && exponent < 0 {
                    Expr::raw(Node::Pow(base.clone(), exponent))
                } else {
                    Expr::constant(rational_pow(c, exponent))
                }
            }
            Node::Pow(b, e) => Expr::pow(b.clone(), e * exponent),
            Node::Product(fs) => Expr::product(fs.iter().map(|f| Expr::pow(f.clone(), exponent))),
            _ => Expr::raw(Node::Pow(base, exponent)),
        }
    }

    pub fn sin(arg: Expr) -> Expr {
        if arg.is_zero() {
            return Expr::zero();
        }
        Expr::raw(Node::Sin(arg))
    }

    pub fn cos(arg: Expr) -> Expr {
        if arg.is_zero() {
            return Expr::one();
        }
        Expr::raw(Node::Cos(arg))
    }

    pub fn sinh(arg: Expr) -> Expr {
        if arg.is_zero() {
            return Expr::zero();
        }
        Expr::raw(Node::Sinh(arg))
    }

    pub fn cosh(arg: Expr) -> Expr {
        if arg.is_zero() {
            return Expr::one();
        }
        Expr::raw(Node::Cosh(arg))
    }

    /// Curvature-tagged sine `S_k(arg)`.
    pub fn tag_s(arg: Expr, kappa: Expr) -> Expr {
        if kappa.is_zero() {
            return arg;
        }
        if arg.is_zero() {
            return Expr::zero();
        }
        Expr::raw(Node::TagS(arg, kappa))
    }

    /// Curvature-tagged cosine `C_k(arg)`.
    pub fn tag_c(arg: Expr, kappa: Expr) -> Expr {
        if kappa.is_zero() || arg.is_zero() {
            return Expr::one();
        }
        Expr::raw(Node::TagC(arg, kappa))
    }

    /// Curvature-tagged tangent, stored as `S_k * C_k^-1`.
    pub fn tag_t(arg: Expr, kappa: Expr) -> Expr {
        let s = Expr::tag_s(arg.clone(), kappa.clone());
        let c = Expr::tag_c(arg, kappa);
        s * Expr::pow(c, -1)
    }

    pub fn powi(&self, exponent: i64) -> Expr {
        Expr::pow(self.clone(), exponent)
    }

    pub fn recip(&self) -> Expr {
        self.powi(-1)
    }

    /// Splits off the rational coefficient of a product; `rest` is the remaining
    /// (already sorted) factor list.
    fn split_coefficient(&self) -> (Rational, Vec<Expr>) {
        match self.node() {
            Node::Const(c) => (c.clone(), Vec::new()),
            Node::Product(fs) => match fs[0].node() {
                Node::Const(c) => (c.clone(), fs[1..].to_vec()),
                _ => (Rational::one(), fs.clone()),
            },
            _ => (Rational::one(), vec![self.clone()]),
        }
    }

    fn scaled_factors(c: Rational, mut rest: Vec<Expr>) -> Expr {
        if rest.is_empty() {
            return Expr::constant(c);
        }
        if c.is_one() {
            if rest.len() == 1 {
                return rest.pop().unwrap();
            }
            return Expr::raw(Node::Product(rest));
        }
        rest.insert(0, Expr::constant(c));
        Expr::raw(Node::Product(rest))
    }

    /// Rational coefficient and the remaining factor of a term.
    pub fn coefficient_split(&self) -> (Rational, Expr) {
        let (c, rest) = self.split_coefficient();
        (c, Expr::scaled_factors(Rational::one(), rest))
    }

    /// Top-level additive operands (a single-element slice for non-sums).
    pub fn additive_terms(&self) -> &[Expr] {
        match self.node() {
            Node::Sum(ts) => ts,
            _ => std::slice::from_ref(self),
        }
    }

    pub fn children(&self) -> Vec<&Expr> {
        match self.node() {
            Node::Const(_) | Node::Param(_) | Node::Var(_) => Vec::new(),
            Node::Sum(xs) | Node::Product(xs) => xs.iter().collect(),
            Node::Pow(b, _) => vec![b],
            Node::Sin(a) | Node::Cos(a) | Node::Sinh(a) | Node::Cosh(a) => vec![a],
            Node::TagS(a, k) | Node::TagC(a, k) => vec![a, k],
        }
    }

    pub fn free_symbols(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_symbols(&mut out);
        out
    }

    pub(crate) fn collect_symbols(&self, out: &mut BTreeSet<String>) {
        match self.node() {
            Node::Var(n) | Node::Param(n) => {
                out.insert(n.clone());
            }
            _ => {
                for c in self.children() {
                    c.collect_symbols(out);
                }
            }
        }
    }

    pub fn contains_symbol(&self, name: &str) -> bool {
        match self.node() {
            Node::Var(n) | Node::Param(n) => n == name,
            _ => self.children().into_iter().any(|c| c.contains_symbol(name)),
        }
    }

    /// Rebuilds `self` bottom-up through the canonical constructors, mapping each
    /// leaf through `leaf`.
    fn rebuild(&self, leaf: &dyn Fn(&Expr) -> Expr) -> Expr {
        match self.node() {
            Node::Const(_) | Node::Param(_) | Node::Var(_) => leaf(self),
            Node::Sum(xs) => Expr::sum(xs.iter().map(|x| x.rebuild(leaf))),
            Node::Product(xs) => Expr::product(xs.iter().map(|x| x.rebuild(leaf))),
            Node::Pow(b, e) => Expr::pow(b.rebuild(leaf), *e),
            Node::Sin(a) => Expr::sin(a.rebuild(leaf)),
            Node::Cos(a) => Expr::cos(a.rebuild(leaf)),
            Node::Sinh(a) => Expr::sinh(a.rebuild(leaf)),
            Node::Cosh(a) => Expr::cosh(a.rebuild(leaf)),
            Node::TagS(a, k) => Expr::tag_s(a.rebuild(leaf), k.rebuild(leaf)),
            Node::TagC(a, k) => Expr::tag_c(a.rebuild(leaf), k.rebuild(leaf)),
        }
    }

    /// Structural simplification: constant folding, flattening, like-term collection
    /// and power merging. Idempotent.
    pub fn simplify(&self) -> Expr {
        self.rebuild(&|e| e.clone())
    }

    /// Replaces every occurrence of the symbol `name` by `value`.
    pub fn substitute(&self, name: &str, value: &Expr) -> Expr {
        if !self.contains_symbol(name) {
            return self.clone();
        }
        self.rebuild(&|e| match e.symbol_name() {
            Some(n) if n == name => value.clone(),
            _ => e.clone(),
        })
    }

    /// Fully distributes products over sums and expands positive integer powers.
    pub fn expand(&self) -> Expr {
        Laurent::from_expr(self, false).to_expr()
    }

    /// [`Expr::expand`] followed by elimination of even powers of `cos`, `cosh` and
    /// `C_k` through the Pythagorean identities. Used as the coefficient normal form
    /// of momentum polynomials.
    pub fn normal_form(&self) -> Expr {
        Laurent::from_expr(self, true).to_expr()
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        1 + self.children().into_iter().map(Expr::size).sum::<usize>()
    }
}

pub(crate) fn rational_pow(c: &Rational, exponent: i64) -> Rational {
    let e = exponent.unsigned_abs();
    let mut acc = Rational::one();
    let mut base = c.clone();
    let mut k = e;
    while k > 0 {
        if k & 1 == 1 {
            acc *= &base;
        }
        k >>= 1;
        if k > 0 {
            base = &base * &base;
        }
    }
    if exponent < 0 {
        acc.recip()
    } else {
        acc
    }
}

pub(crate) fn rational_to_f64(c: &Rational) -> f64 {
    match (c.numer().to_f64(), c.denom().to_f64()) {
        (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
        _ => {
            // huge numerator/denominator: scale both down first
            let shift = c.numer().bits().max(c.denom().bits()).saturating_sub(900);
            let n = (c.numer() >> shift).to_f64().unwrap_or(f64::NAN);
            let d = (c.denom() >> shift).to_f64().unwrap_or(f64::NAN);
            n / d
        }
    }
}

impl From<i64> for Expr {
    fn from(v: i64) -> Self {
        Expr::int(v)
    }
}

impl From<Rational> for Expr {
    fn from(v: Rational) -> Self {
        Expr::constant(v)
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $body:expr) => {
        impl $trait<Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self, rhs)
            }
        }
        impl $trait<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self.clone(), rhs.clone())
            }
        }
        impl $trait<&Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self, rhs.clone())
            }
        }
        impl $trait<Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self.clone(), rhs)
            }
        }
    };
}

binop!(Add, add, |a, b| Expr::sum([a, b]));
binop!(Sub, sub, |a, b| Expr::sum([a, -b]));
binop!(Mul, mul, |a, b| Expr::product([a, b]));
binop!(Div, div, |a, b| Expr::product([a, Expr::pow(b, -1)]));

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::product([Expr::int(-1), self])
    }
}

impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        -self.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> Expr {
        Expr::var("x")
    }

    #[test]
    fn like_terms_collect() {
        assert_eq!(x() + x(), Expr::int(2) * x());
        assert_eq!(x() - x(), Expr::zero());
    }

    #[test]
    fn constants_fold_in_products() {
        let p = Expr::var("p");
        let e = Expr::product([Expr::int(2), Expr::rational(1, 2), p.powi(2)]);
        assert_eq!(e, p.powi(2));
    }

    #[test]
    fn powers_merge_and_cancel() {
        assert_eq!(x() * x().powi(2), x().powi(3));
        assert_eq!(x() * x().recip(), Expr::one());
        assert_eq!(x().powi(2).powi(-3), x().powi(-6));
    }

    #[test]
    fn flat_curvature_branch() {
        let u = Expr::var("u");
        assert_eq!(Expr::tag_s(u.clone(), Expr::zero()), u);
        assert_eq!(Expr::tag_c(u.clone(), Expr::zero()), Expr::one());
        assert_eq!(Expr::tag_t(u.clone(), Expr::zero()), u);
    }

    #[test]
    fn sums_flatten_and_sort() {
        let y = Expr::var("y");
        let a = (x() + y.clone()) + Expr::int(3);
        let b = Expr::int(3) + (y.clone() + x());
        assert_eq!(a, b);
        assert_eq!(a.additive_terms().len(), 3);
    }

    #[test]
    fn simplify_is_idempotent_on_nested_input() {
        let y = Expr::var("y");
        let e = (x() + y.clone()) * (x() + y.clone()) * Expr::rational(3, 4) + x() * Expr::int(0);
        let s = e.simplify();
        assert_eq!(s, s.simplify());
        assert_eq!(s, e);
    }

    #[test]
    fn expand_distributes() {
        let y = Expr::var("y");
        let e = ((x() + y.clone()) * (x() - y.clone())).expand();
        assert_eq!(e, x().powi(2) - y.powi(2));
    }

    #[test]
    fn normal_form_reduces_cosine_squares() {
        let c = Expr::cos(x());
        let s = Expr::sin(x());
        let e = c.powi(2) + s.powi(2) - Expr::one();
        assert!(e.normal_form().is_zero());
        let k = Expr::param("kappa");
        let tc = Expr::tag_c(x(), k.clone());
        let ts = Expr::tag_s(x(), k.clone());
        let e = tc.powi(2) + k * ts.powi(2) - Expr::one();
        assert!(e.normal_form().is_zero());
    }

    #[test]
    fn substitute_replaces_symbol() {
        let e = x().powi(2) + Expr::var("y");
        let r = e.substitute("x", &Expr::int(3));
        assert_eq!(r, Expr::int(9) + Expr::var("y"));
    }
}
