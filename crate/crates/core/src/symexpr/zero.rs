//! Probabilistic zero testing by random evaluation.
//!
//! A residual is judged relative to the largest additive term at the sample point:
//! `|value| <= tol * (1 + max_term)`. Cancellation of large terms therefore passes,
//! while a small expression that is not identically zero still fails.

use std::collections::BTreeSet;

use rand::Rng;
use serde::Serialize;

use super::{Bindings, EvalError, Expr};
use crate::sampling::{SampleError, Windows};

/// Anything that can be evaluated with a per-point magnitude estimate.
pub trait Evaluate {
    /// Value at `b` and the largest absolute additive term.
    fn eval_scaled(&self, b: &Bindings) -> Result<(f64, f64), EvalError>;
    fn symbols(&self) -> BTreeSet<String>;
}

impl Evaluate for Expr {
    fn eval_scaled(&self, b: &Bindings) -> Result<(f64, f64), EvalError> {
        let mut total = 0.0;
        let mut scale: f64 = 0.0;
        for t in self.additive_terms() {
            let v = t.eval(b)?;
            total += v;
            scale = scale.max(v.abs());
        }
        Ok((total, scale))
    }

    fn symbols(&self) -> BTreeSet<String> {
        self.free_symbols()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroReport {
    pub pass: bool,
    /// Largest `|value| / (1 + max_term)` over the samples.
    pub max_residual: f64,
    pub samples: usize,
}

/// Evaluates `e` at `trials` random points drawn from `windows`. Points where
/// evaluation fails are redrawn, up to the window set's retry budget.
pub fn zero_test<E: Evaluate + ?Sized, R: Rng + ?Sized>(
    e: &E,
    windows: &Windows,
    trials: usize,
    tol: f64,
    rng: &mut R,
) -> Result<ZeroReport, SampleError> {
    let names = e.symbols();
    let mut max_residual: f64 = 0.0;
    for _ in 0..trials.max(1) {
        let (value, scale) = windows.sample_eval(&names, rng, |b| e.eval_scaled(b))?;
        max_residual = max_residual.max(value.abs() / (1.0 + scale));
    }
    Ok(ZeroReport {
        pass: max_residual <= tol,
        max_residual,
        samples: trials.max(1),
    })
}

pub fn is_zero_probabilistic<E: Evaluate + ?Sized, R: Rng + ?Sized>(
    e: &E,
    windows: &Windows,
    trials: usize,
    tol: f64,
    rng: &mut R,
) -> Result<bool, SampleError> {
    zero_test(e, windows, trials, tol, rng).map(|r| r.pass)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::SampleWindow;
    use crate::symexpr::Parser;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn windows() -> Windows {
        let mut w = Windows::new();
        w.insert("x", SampleWindow::new(-2.0, 2.0));
        w.insert("kappa", SampleWindow::new(-2.0, 2.0));
        w
    }

    #[test]
    fn pythagorean_identity_is_zero() {
        let e = Parser::with_params(["kappa"])
            .parse("Ck(x, kappa)^2 + kappa*Sk(x, kappa)^2 - 1")
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(is_zero_probabilistic(&e, &windows(), 20, 1e-9, &mut rng).unwrap());
    }

    #[test]
    fn variable_is_not_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(!is_zero_probabilistic(&Expr::var("x"), &windows(), 20, 1e-9, &mut rng).unwrap());
    }

    #[test]
    fn double_angle_is_zero() {
        let e = Parser::new().parse("sin(2*x) - 2*sin(x)*cos(x)").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert!(is_zero_probabilistic(&e, &windows(), 20, 1e-9, &mut rng).unwrap());
    }

    #[test]
    fn missing_window_is_an_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let r = is_zero_probabilistic(&Expr::var("y"), &windows(), 5, 1e-9, &mut rng);
        assert!(matches!(r, Err(SampleError::MissingWindow(_))));
    }
}
