//! Rational-parameter extensions of Hamiltonian systems.
//!
//! Given a Hamiltonian `L` on a phase space `Q` and a function `G` with
//! `X_L^2(G) = -2(c L + L0) G`, this crate builds, for any positive integers
//! `m, n`, the extended Hamiltonian
//!
//! ```text
//! H_{m,n} = p_u^2 / 2 + (m/n)^2 (alpha(u) L + beta(u))
//! ```
//!
//! on `T x Q` together with its polynomial first integral
//! `K_{m,n} = (p_u + (m/n^2) gamma(u) X_L)^m (G_n)`, and checks the result by
//! random-point zero testing, a finite-difference bracket oracle and trajectory
//! integration.
//!
//! Module map:
//! - [`symexpr`]: expression trees, parsing, differentiation, evaluation.
//! - [`phasespace`]: momentum polynomials and the canonical Poisson bracket.
//! - [`extension`]: the `G_n` sequence, the `(alpha, beta, gamma)` table and `H`, `K`.
//! - [`verify`]: residual sampling, finite-difference oracle, RK4 drift runs.
//! - [`systems`]: builtin systems and the config-file loader.

pub mod error;
pub mod extension;
pub mod phasespace;
pub mod sampling;
pub mod symexpr;
pub mod systems;
pub mod verify;

pub use error::{Error, Result};
pub use extension::{ExtensionSpec, Lambda, TableOneFunctions};
pub use phasespace::{CanonicalChart, MomentumPoly};
pub use sampling::{SampleWindow, Windows};
pub use symexpr::{Bindings, Expr};
pub use systems::SystemDef;
