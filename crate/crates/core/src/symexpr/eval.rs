use std::collections::HashMap;

use thiserror::Error;

use super::{rational_to_f64, Expr, Node};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("unbound symbol `{0}`")]
    Unbound(String),
    #[error("pole hit: zero base in `{0}`")]
    Pole(String),
    #[error("non-finite intermediate value")]
    NonFinite,
}

/// Numeric values for free symbols, keyed by name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Bindings(HashMap<String, f64>);

impl Bindings {
    pub fn new() -> Self {
        Bindings::default()
    }

    pub fn with(mut self, name: impl Into<String>, value: f64) -> Self {
        self.set(name, value);
        self
    }

    pub fn set(&mut self, name: impl Into<String>, value: f64) {
        self.0.insert(name.into(), value);
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.get(name).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn extend(&mut self, other: &Bindings) {
        for (k, v) in other.iter() {
            self.set(k, v);
        }
    }
}

impl<S: Into<String>> FromIterator<(S, f64)> for Bindings {
    fn from_iter<I: IntoIterator<Item = (S, f64)>>(iter: I) -> Self {
        Bindings(iter.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }
}

/// `S_k(x)` evaluated on the branch selected by the sign of `k`.
pub fn tagged_sin(x: f64, kappa: f64) -> f64 {
    if kappa > 0.0 {
        let r = kappa.sqrt();
        (r * x).sin() / r
    } else if kappa < 0.0 {
        let r = (-kappa).sqrt();
        (r * x).sinh() / r
    } else {
        x
    }
}

/// `C_k(x)` evaluated on the branch selected by the sign of `k`.
pub fn tagged_cos(x: f64, kappa: f64) -> f64 {
    if kappa > 0.0 {
        (kappa.sqrt() * x).cos()
    } else if kappa < 0.0 {
        ((-kappa).sqrt() * x).cosh()
    } else {
        1.0
    }
}

impl Expr {
    pub fn eval(&self, b: &Bindings) -> Result<f64, EvalError> {
        let v = match self.node() {
            Node::Const(c) => rational_to_f64(c),
            Node::Var(n) | Node::Param(n) => {
                b.get(n).ok_or_else(|| EvalError::Unbound(n.clone()))?
            }
            Node::Sum(xs) => {
                let mut acc = 0.0;
                for x in xs {
                    acc += x.eval(b)?;
                }
                acc
            }
            Node::Product(xs) => {
                let mut acc = 1.0;
                for x in xs {
                    acc *= x.eval(b)?;
                }
                acc
            }
            Node::Pow(base, e) => {
                let v = base.eval(b)?;
                if *e < 0 && v == 0.0 {
                    return Err(EvalError::Pole(format!("{self}")));
                }
                v.powi(*e as i32)
            }
            Node::Sin(a) => a.eval(b)?.sin(),
            Node::Cos(a) => a.eval(b)?.cos(),
            Node::Sinh(a) => a.eval(b)?.sinh(),
            Node::Cosh(a) => a.eval(b)?.cosh(),
            Node::TagS(a, k) => tagged_sin(a.eval(b)?, k.eval(b)?),
            Node::TagC(a, k) => tagged_cos(a.eval(b)?, k.eval(b)?),
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite)
        }
    }
}
