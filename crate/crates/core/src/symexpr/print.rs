//! Plain-text (re-parseable) and LaTeX printers.

use std::fmt;

use num_traits::{One, Signed};

use super::{Expr, Node, Rational};

const GREEK: &[&str] = &[
    "alpha", "beta", "gamma", "delta", "epsilon", "zeta", "eta", "theta", "iota", "kappa",
    "lambda", "mu", "nu", "xi", "pi", "rho", "sigma", "tau", "upsilon", "phi", "chi", "psi",
    "omega", "Gamma", "Delta", "Theta", "Lambda", "Xi", "Pi", "Sigma", "Phi", "Psi", "Omega",
];

fn is_negative_term(e: &Expr) -> bool {
    match e.node() {
        Node::Const(c) => c.is_negative(),
        Node::Product(fs) => fs[0].as_const().is_some_and(|c| c.is_negative()),
        _ => false,
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_plain(self, f, 0)
    }
}

// prec: 0 = anywhere, 1 = product factor, 2 = power base
fn write_plain(e: &Expr, f: &mut fmt::Formatter<'_>, prec: u8) -> fmt::Result {
    match e.node() {
        Node::Const(c) => {
            if prec >= 2 && (c.is_negative() || !c.is_integer()) {
                write!(f, "({c})")
            } else {
                write!(f, "{c}")
            }
        }
        Node::Var(n) | Node::Param(n) => write!(f, "{n}"),
        Node::Sum(ts) => {
            if prec >= 1 {
                write!(f, "(")?;
            }
            for (i, t) in ts.iter().enumerate() {
                if i == 0 {
                    write_plain(t, f, 0)?;
                } else if is_negative_term(t) {
                    write!(f, " - ")?;
                    write_plain(&-t, f, 0)?;
                } else {
                    write!(f, " + ")?;
                    write_plain(t, f, 0)?;
                }
            }
            if prec >= 1 {
                write!(f, ")")?;
            }
            Ok(())
        }
        Node::Product(fs) => {
            if prec >= 2 {
                write!(f, "(")?;
            }
            let mut rest: &[Expr] = fs;
            if let Some(c) = fs[0].as_const() {
                if (-c).is_one() {
                    write!(f, "-")?;
                } else {
                    write!(f, "{c}*")?;
                }
                rest = &fs[1..];
            }
            for (i, x) in rest.iter().enumerate() {
                if i > 0 {
                    write!(f, "*")?;
                }
                write_plain(x, f, 1)?;
            }
            if prec >= 2 {
                write!(f, ")")?;
            }
            Ok(())
        }
        Node::Pow(b, k) => {
            write_plain(b, f, 2)?;
            if *k < 0 {
                write!(f, "^({k})")
            } else {
                write!(f, "^{k}")
            }
        }
        Node::Sin(a) => write!(f, "sin({a})"),
        Node::Cos(a) => write!(f, "cos({a})"),
        Node::Sinh(a) => write!(f, "sinh({a})"),
        Node::Cosh(a) => write!(f, "cosh({a})"),
        Node::TagS(a, k) => write!(f, "Sk({a}, {k})"),
        Node::TagC(a, k) => write!(f, "Ck({a}, {k})"),
    }
}

/// LaTeX spelling of an identifier: Greek names become commands, `_` and trailing
/// digits become subscripts (`p_xi2` renders as `p_{\xi_{2}}`).
pub fn latex_symbol(name: &str) -> String {
    if let Some((head, tail)) = name.split_once('_') {
        return format!("{}_{{{}}}", latex_symbol(head), latex_symbol(tail));
    }
    let digits = name.len() - name.trim_end_matches(|c: char| c.is_ascii_digit()).len();
    if digits > 0 && digits < name.len() {
        let (stem, sub) = name.split_at(name.len() - digits);
        return format!("{}_{{{}}}", latex_symbol(stem), sub);
    }
    if GREEK.contains(&name) {
        format!("\\{name}")
    } else {
        name.to_string()
    }
}

fn latex_rational(c: &Rational) -> String {
    if c.is_integer() {
        c.to_string()
    } else {
        let sign = if c.is_negative() { "-" } else { "" };
        format!("{sign}\\frac{{{}}}{{{}}}", c.numer().abs(), c.denom())
    }
}

impl Expr {
    pub fn to_latex(&self) -> String {
        latex(self, 0)
    }
}

fn is_symbol(e: &Expr) -> bool {
    matches!(e.node(), Node::Var(_) | Node::Param(_))
}

fn latex_function(name: &str, arg: &Expr, power: Option<i64>) -> String {
    let pw = power
        .filter(|k| *k != 1)
        .map(|k| format!("^{{{k}}}"))
        .unwrap_or_default();
    if is_symbol(arg) {
        format!("{name}{pw} {}", latex(arg, 0))
    } else {
        format!("{name}{pw}\\left({}\\right)", latex(arg, 0))
    }
}

fn latex_power_base(b: &Expr, k: i64) -> String {
    let sup = if k == 1 {
        String::new()
    } else {
        format!("^{{{k}}}")
    };
    match b.node() {
        Node::Sin(a) => latex_function("\\sin", a, Some(k)),
        Node::Cos(a) => latex_function("\\cos", a, Some(k)),
        Node::Sinh(a) => latex_function("\\sinh", a, Some(k)),
        Node::Cosh(a) => latex_function("\\cosh", a, Some(k)),
        Node::TagS(a, kap) => {
            format!("S{sup}_{{{}}}\\left({}\\right)", latex(kap, 0), latex(a, 0))
        }
        Node::TagC(a, kap) => {
            format!("C{sup}_{{{}}}\\left({}\\right)", latex(kap, 0), latex(a, 0))
        }
        Node::Var(_) | Node::Param(_) => format!("{}{sup}", latex(b, 0)),
        _ => format!("\\left({}\\right){sup}", latex(b, 0)),
    }
}

fn latex_factor(x: &Expr) -> String {
    match x.node() {
        Node::Pow(b, k) => latex_power_base(b, *k),
        _ => latex(x, 1),
    }
}

fn latex_factors(fs: &[Expr]) -> String {
    fs.iter().map(latex_factor).collect::<Vec<_>>().join(" ")
}

fn latex(e: &Expr, prec: u8) -> String {
    match e.node() {
        Node::Const(c) => {
            let s = latex_rational(c);
            if prec >= 1 && c.is_negative() {
                format!("\\left({s}\\right)")
            } else {
                s
            }
        }
        Node::Var(n) | Node::Param(n) => latex_symbol(n),
        Node::Sum(ts) => {
            let mut out = String::new();
            for (i, t) in ts.iter().enumerate() {
                if i == 0 {
                    out.push_str(&latex(t, 0));
                } else if is_negative_term(t) {
                    out.push_str(" - ");
                    out.push_str(&latex(&-t, 0));
                } else {
                    out.push_str(" + ");
                    out.push_str(&latex(t, 0));
                }
            }
            if prec >= 1 {
                format!("\\left({out}\\right)")
            } else {
                out
            }
        }
        Node::Product(fs) => {
            let (coeff, rest) = match fs[0].as_const() {
                Some(c) => (c.clone(), &fs[1..]),
                None => (Rational::one(), &fs[..]),
            };
            let mut num = Vec::new();
            let mut den = Vec::new();
            for x in rest {
                match x.node() {
                    Node::Pow(b, k) if *k < 0 => den.push(Expr::pow(b.clone(), -k)),
                    _ => num.push(x.clone()),
                }
            }
            let sign = if coeff.is_negative() { "-" } else { "" };
            let cn = coeff.numer().abs();
            let cd = coeff.denom().clone();
            let body = if den.is_empty() && cd.is_one() {
                let mut parts = Vec::new();
                if !cn.is_one() || num.is_empty() {
                    parts.push(cn.to_string());
                }
                parts.push(latex_factors(&num));
                parts.retain(|p| !p.is_empty());
                parts.join(" ")
            } else {
                let mut top = Vec::new();
                if !cn.is_one() || num.is_empty() {
                    top.push(cn.to_string());
                }
                if !num.is_empty() {
                    top.push(latex_factors(&num));
                }
                let mut bottom = Vec::new();
                if !cd.is_one() {
                    bottom.push(cd.to_string());
                }
                if !den.is_empty() {
                    bottom.push(latex_factors(&den));
                }
                format!("\\frac{{{}}}{{{}}}", top.join(" "), bottom.join(" "))
            };
            let s = format!("{sign}{body}");
            if prec >= 1 && !sign.is_empty() {
                format!("\\left({s}\\right)")
            } else {
                s
            }
        }
        Node::Pow(b, k) => {
            if *k < 0 {
                format!("\\frac{{1}}{{{}}}", latex_power_base(b, -k))
            } else {
                latex_power_base(b, *k)
            }
        }
        Node::Sin(a) => latex_function("\\sin", a, None),
        Node::Cos(a) => latex_function("\\cos", a, None),
        Node::Sinh(a) => latex_function("\\sinh", a, None),
        Node::Cosh(a) => latex_function("\\cosh", a, None),
        Node::TagS(a, k) => format!("S_{{{}}}\\left({}\\right)", latex(k, 0), latex(a, 0)),
        Node::TagC(a, k) => format!("C_{{{}}}\\left({}\\right)", latex(k, 0), latex(a, 0)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::{parse, Parser};

    #[test]
    fn plain_round_trips() {
        for text in [
            "x - y",
            "1/2*p^2 + omega^2*x^2",
            "-x*y^(-2) + 3",
            "(x + y)^(-1)*sin(2*x)",
            "Sk(u, k)^(-2)*Ck(u, k) - 1/3*cosh(x)",
        ] {
            let e = parse(text).unwrap();
            let again = parse(&e.to_string()).unwrap();
            assert_eq!(e, again, "{text} -> {e}");
        }
    }

    #[test]
    fn latex_symbols() {
        assert_eq!(latex_symbol("p_xi2"), "p_{\\xi_{2}}");
        assert_eq!(latex_symbol("omega"), "\\omega");
        assert_eq!(latex_symbol("x"), "x");
    }

    #[test]
    fn latex_fraction() {
        let e = Parser::with_params(["a"])
            .parse("-2*a*cos(phi)^3/sin(phi)^2")
            .unwrap();
        assert_eq!(
            e.to_latex(),
            "-\\frac{2 a \\cos^{3} \\phi}{\\sin^{2} \\phi}"
        );
    }
}
