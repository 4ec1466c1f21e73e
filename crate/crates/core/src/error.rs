use thiserror::Error;

use crate::sampling::SampleError;
use crate::symexpr::{EvalError, ParseError};

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Sample(#[from] SampleError),
    #[error("chart mismatch: {0}")]
    ChartMismatch(String),
    #[error("invalid chart: {0}")]
    InvalidChart(String),
    #[error("negative power of momentum `{0}`")]
    NegativeMomentumPower(String),
    #[error("`{0}` is not polynomial in the momenta")]
    NotPolynomial(String),
    #[error("invalid extension parameters: {0}")]
    InvalidSpec(String),
    #[error("CG condition violated (max residual {max_residual:e})")]
    CgViolated { max_residual: f64 },
    #[error("config error: {0}")]
    Config(String),
    #[error("unknown system `{0}`")]
    UnknownSystem(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
