use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "qmoments", version, about = "Moment, functional and application studies on simulated circuits")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct Common {
    /// Seed for every random stream. Required: runs are never seeded from the clock.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads. Results do not depend on this.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Directory for CSV and JSON reports.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,

    /// Largest number of prepared state copies a run may consume.
    #[arg(long, global = true, default_value_t = 1_000_000_000)]
    pub budget: u64,
}

#[derive(Debug, Subcommand, Clone, Serialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum Command {
    /// Estimate Tr(ρ²)…Tr(ρᵏ) with the reset chain.
    Moments(MomentsArgs),
    /// Estimate one polynomial functional with the direct circuit.
    Qsf(QsfArgs),
    /// Estimate several polynomial functionals.
    Multi(MultiArgs),
    /// Estimate Tr(Oρ)…Tr(Oρᵏ) for a Pauli observable.
    Weighted(WeightedArgs),
    /// Monte Carlo study of largest-eigenvalue intervals.
    EigInterval(IntervalArgs),
    /// Virtual cooling of the Heisenberg chain.
    Qvc(QvcArgs),
    /// Error versus shot count for virtual cooling.
    Scaling(ScalingArgs),
    /// Rényi entropies of the Gibbs state of H = Z from the purified circuit.
    Renyi(RenyiArgs),
}

#[derive(Debug, Args, Clone, Serialize)]
pub struct MomentsArgs {
    /// State: pure-zero:m, max-mixed:m, gibbs-z:β, heisenberg-gibbs:n,β[,J,h], dirichlet:rank,seed or file:path.
    #[arg(long)]
    pub state: String,
    #[arg(long)]
    pub k: usize,
    /// Target additive error; sets the shot count when --shots is absent.
    #[arg(long, default_value_t = 0.01)]
    pub eps: f64,
    #[arg(long)]
    pub shots: Option<u64>,
}

#[derive(Debug, Args, Clone, Serialize)]
pub struct QsfArgs {
    #[arg(long)]
    pub state: String,
    /// Coefficients α₁,…,α_k of Σ α_j Tr(ρʲ).
    #[arg(long, allow_hyphen_values = true)]
    pub coeffs: String,
    #[arg(long)]
    pub shots: u64,
}

#[derive(Debug, Args, Clone, Serialize)]
pub struct MultiArgs {
    #[arg(long)]
    pub state: String,
    /// One coefficient list per functional; repeat the flag.
    #[arg(long = "coeffs", required = true, allow_hyphen_values = true)]
    pub coeffs: Vec<String>,
    #[arg(long)]
    pub shots: u64,
    #[arg(long, value_enum, default_value_t = Strategy::MomentReuse)]
    pub strategy: Strategy,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    MomentReuse,
    ParallelCircuit,
}

#[derive(Debug, Args, Clone, Serialize)]
pub struct WeightedArgs {
    #[arg(long)]
    pub state: String,
    /// Observable file (lines of `coefficient PAULIS`) or heisenberg:n[,J,h].
    #[arg(long)]
    pub observable: String,
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub shots: u64,
    #[arg(long, value_enum, default_value_t = Scheme::Pauli)]
    pub scheme: Scheme,
    #[arg(long, value_enum, default_value_t = BackendArg::Auto)]
    pub backend: BackendArg,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Lcu,
    Pauli,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendArg {
    Auto,
    Statevector,
    Table,
}

#[derive(Debug, Args, Clone, Serialize)]
pub struct IntervalArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [2, 4, 8, 16, 32])]
    pub ranks: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [1e-6, 1e-5, 1e-4, 1e-3])]
    pub eps: Vec<f64>,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, default_value_t = 4)]
    pub k: usize,
}

#[derive(Debug, Args, Clone, Serialize)]
pub struct QvcArgs {
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    #[arg(long, default_value_t = 0.5)]
    pub beta: f64,
    #[arg(long = "coupling", default_value_t = 1.0, allow_hyphen_values = true)]
    pub j: f64,
    #[arg(long = "field", default_value_t = 1.0, allow_hyphen_values = true)]
    pub h: f64,
    /// Largest order; energies are reported for 1..=k.
    #[arg(long, default_value_t = 4)]
    pub k: usize,
    #[arg(long, default_value_t = 100_000)]
    pub shots: u64,
    #[arg(long, default_value_t = 10)]
    pub runs: usize,
    /// Also run independent SWAP tests per order at the same copy budget.
    #[arg(long)]
    pub baseline: bool,
    #[arg(long, value_enum, default_value_t = BackendArg::Table)]
    pub backend: BackendArg,
}

#[derive(Debug, Args, Clone, Serialize)]
pub struct ScalingArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [3, 4])]
    pub n: Vec<usize>,
    #[arg(long, default_value_t = 0.5)]
    pub beta: f64,
    #[arg(long, value_delimiter = ',', default_values_t = [1, 2, 3])]
    pub k: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [1_000, 10_000, 100_000, 1_000_000])]
    pub shots: Vec<u64>,
    #[arg(long, default_value_t = 50)]
    pub runs: usize,
}

#[derive(Debug, Args, Clone, Serialize)]
pub struct RenyiArgs {
    #[arg(long, default_value_t = 0.5)]
    pub beta: f64,
    #[arg(long, value_delimiter = ',', default_values_t = [2, 3, 4])]
    pub alpha: Vec<usize>,
    #[arg(long, default_value_t = 1_000_000)]
    pub shots: u64,
    #[arg(long, value_enum, default_value_t = LogBaseArg::Natural)]
    pub log_base: LogBaseArg,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LogBaseArg {
    Natural,
    #[value(name = "2")]
    #[serde(rename = "2")]
    Two,
}
