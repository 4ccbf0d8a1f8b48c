//! Command-line definition.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "ROBCAL_OUT";

/// Weighted least-squares calibration of serial manipulators.
///
/// Files use degrees, micrometers and newtons; every command writes its
/// results into the output directory atomically (all files or none).
#[derive(Debug, Parser)]
#[command(name = "robcal", version, about, long_about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Identify parameters from a measurement file.
    Calibrate(CalibrateArgs),
    /// Generate a synthetic measurement file with known ground truth.
    Simulate(SimulateArgs),
    /// Monte Carlo comparison of OLS, WLS and IRLS on the simulated study.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Ols,
    Wls,
    Irls,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Model file (TOML). Defaults to the bundled KR-270-like model.
    #[arg(long)]
    pub model: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct OutArgs {
    /// Output directory (created if missing).
    #[arg(long, env = OUT_DIR_ENV, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct EstimatorArgs {
    /// Claimed instrument precision σ₀ in micrometers; also the floor for
    /// estimated dispersions.
    #[arg(long, default_value_t = 10.0, allow_negative_numbers = true)]
    pub sigma0: f64,

    /// Robust-weight sensitivity λ in w = σ₀ / (σ₀ + λσ).
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub lambda: f64,

    /// IRLS stops when the max per-parameter relative change drops below this.
    #[arg(long, default_value_t = 1e-3, allow_negative_numbers = true)]
    pub rel_tol: f64,

    /// Maximum number of IRLS passes.
    #[arg(long, default_value_t = 20)]
    pub max_iter: usize,
}

#[derive(Debug, Clone, Args)]
pub struct CalibrateArgs {
    #[command(flatten)]
    pub model: ModelArgs,

    /// Measurement file (CSV).
    #[arg(long)]
    pub measurements: PathBuf,

    /// Per-configuration dispersions (CSV). Without it, dispersions are
    /// estimated from the unweighted fit's residuals.
    #[arg(long)]
    pub noise: Option<PathBuf>,

    /// Estimator reported next to OLS.
    #[arg(long, value_enum, default_value_t = MethodArg::Wls)]
    pub method: MethodArg,

    #[command(flatten)]
    pub estimator: EstimatorArgs,

    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args)]
pub struct DesignArgs {
    #[command(flatten)]
    pub model: ModelArgs,

    /// Per-configuration dispersions (CSV); defaults to the study's table.
    #[arg(long)]
    pub noise: Option<PathBuf>,

    /// Random seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Markers observed per configuration.
    #[arg(long, default_value_t = 3)]
    pub markers: usize,

    /// Repetitions per configuration.
    #[arg(long, default_value_t = 6)]
    pub repetitions: usize,

    /// Hanging load in kilograms.
    #[arg(long, default_value_t = 265.0, allow_negative_numbers = true)]
    pub mass: f64,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub design: DesignArgs,

    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub design: DesignArgs,

    /// Number of Monte Carlo trials (at least 100).
    #[arg(long, default_value_t = 200)]
    pub trials: usize,

    #[command(flatten)]
    pub estimator: EstimatorArgs,

    #[command(flatten)]
    pub out: OutArgs,
}
