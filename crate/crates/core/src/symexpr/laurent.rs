//! Expanded form: a finite sum of rational multiples of monomials, where a
//! monomial is a sorted list of (atom, non-zero integer exponent).
//!
//! Atoms are symbols, function applications with expanded arguments, and sums
//! raised to negative powers. Positive powers of sums never survive expansion.

use std::collections::{BTreeMap, HashMap};

use num_traits::{One, Zero};

use super::{rational_to_f64, Bindings, EvalError, Expr, Node, Rational};

pub(crate) type Monomial = Vec<(Expr, i64)>;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub(crate) struct Laurent {
    terms: BTreeMap<Monomial, Rational>,
}

fn merge(a: &[(Expr, i64)], b: &[(Expr, i64)]) -> Monomial {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => {
                out.push(a[i].clone());
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j].clone());
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                let e = a[i].1 + b[j].1;
                if e != 0 {
                    out.push((a[i].0.clone(), e));
                }
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

impl Laurent {
    pub fn zero() -> Self {
        Laurent::default()
    }

    pub fn constant(c: Rational) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Vec::new(), c);
        }
        Laurent { terms }
    }

    pub fn one() -> Self {
        Laurent::constant(Rational::one())
    }

    fn atom(a: Expr, e: i64) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(vec![(a, e)], Rational::one());
        Laurent { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn from_monomials(terms: BTreeMap<Monomial, Rational>) -> Self {
        Laurent {
            terms: terms.into_iter().filter(|(_, c)| !c.is_zero()).collect(),
        }
    }

    fn add_term(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn add_assign(&mut self, other: &Laurent) {
        for (m, c) in &other.terms {
            self.add_term(m.clone(), c.clone());
        }
    }

    pub fn scale(&self, s: &Rational) -> Laurent {
        if s.is_zero() {
            return Laurent::zero();
        }
        Laurent {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * s)).collect(),
        }
    }

    pub fn neg(&self) -> Laurent {
        self.scale(&-Rational::one())
    }

    pub fn mul(&self, other: &Laurent) -> Laurent {
        let mut out = Laurent::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(merge(ma, mb), ca * cb);
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> Laurent {
        let mut acc = Laurent::one();
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }

    /// Expanded form of `e`. With `reduce`, even powers of cos/cosh/C_k are
    /// rewritten through the Pythagorean identities.
    pub fn from_expr(e: &Expr, reduce: bool) -> Laurent {
        let l = Self::expand_rec(e, reduce);
        if reduce {
            l.reduce_pythagorean()
        } else {
            l
        }
    }

    fn expand_rec(e: &Expr, reduce: bool) -> Laurent {
        match e.node() {
            Node::Const(c) => Laurent::constant(c.clone()),
            Node::Param(_) | Node::Var(_) => Laurent::atom(e.clone(), 1),
            Node::Sum(xs) => {
                let mut acc = Laurent::zero();
                for x in xs {
                    acc.add_assign(&Self::expand_rec(x, reduce));
                }
                acc
            }
            Node::Product(xs) => {
                let mut acc = Laurent::one();
                for x in xs {
                    acc = acc.mul(&Self::expand_rec(x, reduce));
                    if acc.is_zero() {
                        break;
                    }
                }
                acc
            }
            Node::Pow(b, k) => {
                let base = Self::expand_rec(b, reduce);
                if *k > 0 {
                    return base.pow(*k as u32);
                }
                if base.terms.len() == 1 {
                    let (m, c) = base.terms.iter().next().unwrap();
                    if !c.is_zero() {
                        let mono: Monomial = m.iter().map(|(a, e)| (a.clone(), e * k)).collect();
                        let mut terms = BTreeMap::new();
                        terms.insert(mono, super::rational_pow(c, *k));
                        return Laurent { terms };
                    }
                }
                let base = if reduce {
                    base.reduce_pythagorean()
                } else {
                    base
                };
                Laurent::atom(base.to_expr(), *k)
            }
            Node::Sin(a) => Self::wrap(Expr::sin(Self::arg(a, reduce))),
            Node::Cos(a) => Self::wrap(Expr::cos(Self::arg(a, reduce))),
            Node::Sinh(a) => Self::wrap(Expr::sinh(Self::arg(a, reduce))),
            Node::Cosh(a) => Self::wrap(Expr::cosh(Self::arg(a, reduce))),
            Node::TagS(a, k) => {
                let k = Self::arg(k, reduce);
                let a = Self::arg(a, reduce);
                if k.is_zero() {
                    return Self::expand_rec(&a, reduce);
                }
                Self::wrap(Expr::tag_s(a, k))
            }
            Node::TagC(a, k) => Self::wrap(Expr::tag_c(Self::arg(a, reduce), Self::arg(k, reduce))),
        }
    }

    fn wrap(atom: Expr) -> Laurent {
        match atom.as_const() {
            Some(c) => Laurent::constant(c.clone()),
            None => Laurent::atom(atom, 1),
        }
    }

    fn arg(a: &Expr, reduce: bool) -> Expr {
        Laurent::from_expr(a, reduce).to_expr()
    }

    /// Rewrites `cos^e` (e >= 2) as `cos^(e-2) (1 - sin^2)`, likewise
    /// `cosh^2 = 1 + sinh^2` and `C_k^2 = 1 - k S_k^2`, until no such power remains.
    pub fn reduce_pythagorean(self) -> Laurent {
        let reducible = |m: &Monomial| {
            m.iter().position(|(a, e)| {
                *e >= 2 && matches!(a.node(), Node::Cos(_) | Node::Cosh(_) | Node::TagC(..))
            })
        };
        if !self.terms.keys().any(|m| reducible(m).is_some()) {
            return self;
        }
        let mut out = Laurent::zero();
        let mut work: Vec<(Monomial, Rational)> = self.terms.into_iter().collect();
        while let Some((m, c)) = work.pop() {
            let Some(i) = reducible(&m) else {
                out.add_term(m, c);
                continue;
            };
            let (atom, e) = m[i].clone();
            let mut rest = m.clone();
            if e == 2 {
                rest.remove(i);
            } else {
                rest[i].1 = e - 2;
            }
            // rest * (1 + sign * partner^2 * extra)
            let (partner, sign, extra) = match atom.node() {
                Node::Cos(a) => (Expr::sin(a.clone()), -1, Laurent::one()),
                Node::Cosh(a) => (Expr::sinh(a.clone()), 1, Laurent::one()),
                Node::TagC(a, k) => (
                    Expr::tag_s(a.clone(), k.clone()),
                    -1,
                    Laurent::from_expr(k, false),
                ),
                _ => unreachable!(),
            };
            work.push((rest.clone(), c.clone()));
            let partner_sq = Laurent::atom(partner, 2).mul(&extra);
            let scaled = c * Rational::from_integer(sign.into());
            for (pm, pc) in partner_sq.terms {
                work.push((merge(&rest, &pm), &scaled * pc));
            }
        }
        out
    }

    pub fn to_expr(&self) -> Expr {
        Expr::sum(self.terms.iter().map(|(m, c)| {
            let factors = m.iter().map(|(a, e)| Expr::pow(a.clone(), *e));
            Expr::product(std::iter::once(Expr::constant(c.clone())).chain(factors))
        }))
    }

    pub fn contains_symbol(&self, name: &str) -> bool {
        self.terms
            .keys()
            .any(|m| m.iter().any(|(a, _)| a.contains_symbol(name)))
    }

    pub fn diff(&self, v: &str, reduce: bool) -> Laurent {
        let mut cache: HashMap<usize, Option<Laurent>> = HashMap::new();
        let mut out = Laurent::zero();
        for (m, c) in &self.terms {
            for (i, (a, e)) in m.iter().enumerate() {
                let da = cache
                    .entry(a.ptr_key())
                    .or_insert_with(|| {
                        let d = a.diff(v);
                        if d.is_zero() {
                            None
                        } else {
                            Some(Laurent::from_expr(&d, reduce))
                        }
                    })
                    .clone();
                let Some(da) = da else { continue };
                let mut rest = m.clone();
                if *e == 1 {
                    rest.remove(i);
                } else {
                    rest[i].1 = e - 1;
                }
                let scale = c * Rational::from_integer((*e).into());
                for (dm, dc) in &da.terms {
                    out.add_term(merge(&rest, dm), &scale * dc);
                }
            }
        }
        if reduce {
            out.reduce_pythagorean()
        } else {
            out
        }
    }

    pub fn eval_monomial(
        m: &Monomial,
        c: &Rational,
        b: &Bindings,
        cache: &mut HashMap<usize, f64>,
    ) -> Result<f64, EvalError> {
        let mut t = rational_to_f64(c);
        for (a, e) in m {
            let v = match cache.get(&a.ptr_key()) {
                Some(v) => *v,
                None => {
                    let v = a.eval(b)?;
                    cache.insert(a.ptr_key(), v);
                    v
                }
            };
            if *e < 0 && v == 0.0 {
                return Err(EvalError::Pole(format!("{a}")));
            }
            t *= v.powi(*e as i32);
        }
        if !t.is_finite() {
            return Err(EvalError::NonFinite);
        }
        Ok(t)
    }
}
