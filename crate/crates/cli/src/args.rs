use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "hamext",
    version,
    about = "Construct and verify (m,n)-extensions of Hamiltonian systems"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print G_n, the extended Hamiltonian and its first integral K.
    Construct(Target),
    /// Run the symbolic and sampled checks for one extension.
    Verify(VerifyArgs),
    /// Integrate the extended flow with RK4 and report drifts.
    Integrate(IntegrateArgs),
    /// Degrees and bracket residuals over the grid 1..=max_m x 1..=max_n.
    Sweep(Target),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Plain,
    Latex,
    Json,
}

/// Positional arguments are `<system> [m n]`, or just `[m n]` with `--system-file`.
#[derive(Debug, Args)]
pub struct Target {
    #[arg(value_name = "SYSTEM [M N]", num_args = 0..=3)]
    pub positional: Vec<String>,

    /// Curvature parameter of the warped branch (integer or fraction).
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    pub kappa: String,

    #[arg(long, value_enum, default_value_t = Format::Plain)]
    pub format: Format,

    /// Sampled points per zero test.
    #[arg(long, default_value_t = 100)]
    pub trials: usize,

    /// Relative tolerance of the zero tests.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,

    #[arg(long, default_value_t = 1)]
    pub seed: u64,

    /// Load the system from a TOML or JSON file instead of a builtin name.
    #[arg(long, value_name = "PATH")]
    pub system_file: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub target: Target,

    /// Flip the sign of every reference object; the run must then fail.
    #[arg(long)]
    pub self_test_negate: bool,
}

#[derive(Debug, Args)]
pub struct IntegrateArgs {
    #[command(flatten)]
    pub target: Target,

    #[arg(long, default_value_t = 10.0, allow_hyphen_values = true)]
    pub t_end: f64,

    #[arg(long, default_value_t = 1e-3, allow_hyphen_values = true)]
    pub dt: f64,

    /// Largest accepted relative drift of H, L and K.
    #[arg(long, default_value_t = 1e-6)]
    pub drift_tol: f64,

    /// Initial values as `name=value` pairs separated by commas; the rest are
    /// drawn from the sampling windows with `--seed`.
    #[arg(long, allow_hyphen_values = true)]
    pub start: Option<String>,
}
