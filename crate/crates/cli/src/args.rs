//! Command-line surface.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use otkit_core::otw::MarginalMode;
use otkit_core::{Algo, Family};

#[derive(Debug, Parser)]
#[command(name = "otkit", version, about = "Discrete optimal transport toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a seeded random or grid instance to `problem.json`.
    Generate(GenerateArgs),
    /// Solve one instance; writes the plan, the convergence trace and a summary.
    Run(RunArgs),
    /// Sweep an accuracy grid and record iterations and achieved accuracy.
    Curve(CurveArgs),
    /// Rank algorithms by wall time at a common accuracy target.
    Compare(CompareArgs),
    /// Pairwise optimal transport warping distances of a batch of series.
    Otw(OtwArgs),
    /// Fixed-support Wasserstein barycenter.
    Barycenter(BarycenterArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub n: usize,
    /// Target support size; defaults to `n`.
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long, default_value_t = Family::UniformRandom)]
    pub family: Family,
    #[arg(long, default_value = ".")]
    pub output_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Problem file.
    #[arg(long)]
    pub input: PathBuf,
    /// Solver config file; flags below override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub algo: Option<Algo>,
    /// Entropic strength in cost units.
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Accuracy target as a fraction of ‖C‖∞.
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also solve exactly and report the suboptimality of the plan.
    #[arg(long)]
    pub with_oracle: bool,
    #[arg(long, default_value = ".")]
    pub output_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Comma-separated algorithms; one CSV is written per algorithm.
    #[arg(long, value_delimiter = ',', required = true)]
    pub algo: Vec<Algo>,
    /// Accuracy grid as fractions of ‖C‖∞.
    #[arg(long, value_delimiter = ',', conflicts_with = "eta", required_unless_present = "eta")]
    pub eps: Vec<f64>,
    /// Entropic strength grid in cost units; the target is `4η ln n`.
    #[arg(long, value_delimiter = ',')]
    pub eta: Vec<f64>,
    /// Stopping tolerance; defaults to `ε/(8‖C‖∞)` per grid point.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = ".")]
    pub output_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Comma-separated, distinct algorithms.
    #[arg(long, value_delimiter = ',', required = true)]
    pub algo: Vec<Algo>,
    /// Accuracy target as a fraction of ‖C‖∞.
    #[arg(long, default_value_t = 0.05)]
    pub eps: f64,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = ".")]
    pub output_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct OtwArgs {
    /// CSV with one series per line: an id followed by its values.
    #[arg(long)]
    pub input: PathBuf,
    /// Entropic strength; 0 solves exactly.
    #[arg(long, default_value_t = 0.0)]
    pub eta: f64,
    #[arg(long, default_value_t = 0.0)]
    pub temporal_weight: f64,
    #[arg(long, default_value_t = 1)]
    pub ground_power: u32,
    #[arg(long, default_value_t = MarginalMode::Uniform)]
    pub marginal_mode: MarginalMode,
    #[arg(long, default_value = ".")]
    pub output_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct BarycenterArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Entropic strength; omitted solves the linear program exactly.
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, default_value = ".")]
    pub output_dir: PathBuf,
}
