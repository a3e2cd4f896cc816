use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(
    name = "obata",
    version,
    about = "Classify, construct and verify model manifolds of ∇dw + f(w) g = 0"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Classify the pair (f, μ) and the coercivity type of f.
    Classify(PairArgs),
    /// Build the model manifold of (f, μ) and write it as JSON.
    Construct(ConstructArgs),
    /// Run the identity suite on a model file.
    Verify(VerifyArgs),
    /// Build a warping tower or Euclidean product and its solution basis.
    Basis(BasisArgs),
    /// Recover f from z = −Δw/n on a model or a test chart.
    #[command(name = "recover-f")]
    RecoverF(RecoverArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Seed for every sampled grid.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Args, Debug, Clone)]
pub struct PairArgs {
    /// Profile function f(s), e.g. "s^3 - s".
    #[arg(long = "f", allow_hyphen_values = true)]
    pub f: String,
    #[arg(long, allow_hyphen_values = true)]
    pub mu: f64,
    /// Half-width of the search window around μ.
    #[arg(long, default_value_t = 10.0)]
    pub window: f64,
    /// Time budget of the profile run.
    #[arg(long, default_value_t = 50.0)]
    pub budget: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub tol_f: f64,
    #[arg(long, default_value_t = 1e-9)]
    pub tol_h: f64,
    /// Offsets scanned by the coercivity classifier.
    #[arg(long, default_value_t = 64)]
    pub offsets: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone)]
pub struct ConstructArgs {
    #[command(flatten)]
    pub pair: PairArgs,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
}

#[derive(Args, Debug, Clone)]
pub struct VerifyArgs {
    /// Model file written by `construct`.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = 1e-6)]
    pub tol_obata: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub tol_closure: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub tol_gradient: f64,
    #[arg(long, default_value_t = 1e-5)]
    pub tol_flowline: f64,
    #[arg(long, default_value_t = 1e-7)]
    pub tol_levelset: f64,
    #[arg(long, default_value_t = 1e-5)]
    pub tol_factorization: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub tol_curvature: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub tol_jacobi: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub tol_energy: f64,
    #[arg(long, default_value_t = 1e-7)]
    pub tol_symmetry: f64,
    /// Points of the Obata residual grid.
    #[arg(long, default_value_t = 1024)]
    pub points: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Space {
    Hcosh,
    Hexp,
    Euclid,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FiberArg {
    Line,
    Circle,
    None,
}

#[derive(Args, Debug, Clone)]
pub struct BasisArgs {
    #[arg(long, value_enum)]
    pub space: Space,
    /// Tower depth, or the dimension of the Euclidean factor plus one.
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    #[arg(long, value_enum, default_value_t = FiberArg::Line)]
    pub fiber: FiberArg,
    #[arg(long, default_value_t = 1.0)]
    pub rho: f64,
    /// Relative singular-value threshold of the evaluation rank.
    #[arg(long, default_value_t = 1e-10)]
    pub tol_rank: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestChart {
    /// w = x¹ on the plane.
    Flat,
    /// w = x³ on a line.
    CubicLine,
}

#[derive(Args, Debug, Clone)]
pub struct RecoverArgs {
    #[arg(long, conflicts_with = "space", required_unless_present = "space")]
    pub model: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub space: Option<TestChart>,
    /// Radial grid values.
    #[arg(long)]
    pub radial: Option<usize>,
    /// Fiber points per radial value.
    #[arg(long, default_value_t = 4)]
    pub fibers: usize,
    #[command(flatten)]
    pub common: Common,
}
