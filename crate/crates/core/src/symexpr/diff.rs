use super::{Expr, Node};

impl Expr {
    /// Exact derivative with respect to the symbol `v` (a `Var` or `Param` name).
    ///
    /// The tagged functions follow `S_k' = C_k` and `C_k' = -k S_k` on every branch.
    /// Derivatives in the curvature itself use `dS_k/dk = (x C_k - S_k) / (2k)` and
    /// `dC_k/dk = -x S_k / 2`; the former has a removable singularity at `k = 0`.
    pub fn diff(&self, v: &str) -> Expr {
        match self.node() {
            Node::Const(_) => Expr::zero(),
            Node::Var(n) | Node::Param(n) => {
                if n == v {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Node::Sum(xs) => Expr::sum(xs.iter().map(|x| x.diff(v))),
            Node::Product(xs) => {
                let mut terms = Vec::new();
                for (i, x) in xs.iter().enumerate() {
                    let dx = x.diff(v);
                    if dx.is_zero() {
                        continue;
                    }
                    let mut fs: Vec<Expr> = xs.clone();
                    fs[i] = dx;
                    terms.push(Expr::product(fs));
                }
                Expr::sum(terms)
            }
            Node::Pow(b, e) => {
                let db = b.diff(v);
                if db.is_zero() {
                    return Expr::zero();
                }
                Expr::product([Expr::int(*e), Expr::pow(b.clone(), e - 1), db])
            }
            Node::Sin(a) => chain(a, v, || Expr::cos(a.clone())),
            Node::Cos(a) => chain(a, v, || -Expr::sin(a.clone())),
            Node::Sinh(a) => chain(a, v, || Expr::cosh(a.clone())),
            Node::Cosh(a) => chain(a, v, || Expr::sinh(a.clone())),
            Node::TagS(a, k) => {
                let s = self.clone();
                let c = Expr::tag_c(a.clone(), k.clone());
                let by_arg = chain(a, v, || c.clone());
                let dk = k.diff(v);
                if dk.is_zero() {
                    return by_arg;
                }
                let by_kappa = (a * &c - s) / (Expr::int(2) * k) * dk;
                by_arg + by_kappa
            }
            Node::TagC(a, k) => {
                let s = Expr::tag_s(a.clone(), k.clone());
                let by_arg = chain(a, v, || -(k * &s));
                let dk = k.diff(v);
                if dk.is_zero() {
                    return by_arg;
                }
                let by_kappa = Expr::rational(-1, 2) * a * s * dk;
                by_arg + by_kappa
            }
        }
    }
}

fn chain(arg: &Expr, v: &str, outer: impl FnOnce() -> Expr) -> Expr {
    let da = arg.diff(v);
    if da.is_zero() {
        Expr::zero()
    } else {
        outer() * da
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tagged_derivatives() {
        let u = Expr::var("u");
        let k = Expr::param("kappa");
        let s = Expr::tag_s(u.clone(), k.clone());
        let c = Expr::tag_c(u.clone(), k.clone());
        assert_eq!(s.diff("u"), c);
        assert_eq!(c.diff("u"), -(k * s));
    }

    #[test]
    fn power_rule() {
        let x = Expr::var("x");
        assert_eq!(x.powi(2).diff("x"), Expr::int(2) * x);
    }

    #[test]
    fn second_derivative_solves_oscillator_equation() {
        let u = Expr::var("u");
        let k = Expr::param("kappa");
        for f in [
            Expr::tag_s(u.clone(), k.clone()),
            Expr::tag_c(u.clone(), k.clone()),
        ] {
            let residual = f.diff("u").diff("u") + &k * &f;
            assert!(residual.expand().is_zero(), "{residual}");
        }
    }

    #[test]
    fn chain_rule_through_scaled_argument() {
        let u = Expr::var("u");
        let c = Expr::param("c");
        let k = Expr::param("kappa");
        let s = Expr::tag_s(&c * &u, k.clone());
        assert_eq!(
            s.diff("u").expand(),
            (c.clone() * Expr::tag_c(c * u, k)).expand()
        );
    }
}
