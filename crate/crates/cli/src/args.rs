use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "nolips", version, about = "Bregman proximal gradient solvers for low-rank factorization problems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Symmetric nonnegative matrix factorization of a Matrix Market file.
    Symnmf(SymNmfArgs),
    /// Euclidean distance matrix completion.
    Edmc(EdmcArgs),
    /// Sample points on a Helix and write them as CSV.
    HelixGen(HelixArgs),
    /// Build a normalized kNN similarity graph from a feature CSV.
    Simgraph(SimgraphArgs),
    /// Run every algorithm/kernel/seed combination and write one long CSV.
    Bench(BenchArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algo {
    Nolips,
    Pg,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kernel {
    Universal,
    Gram,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Step {
    Dynamic,
    Fixed,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModalityArg {
    Text,
    Image,
    Generic,
}

#[derive(Args, Debug, Clone)]
pub struct SolverArgs {
    #[arg(long, value_enum, default_value = "dynamic")]
    pub step: Step,
    /// Largest step size; defaults to 1e4/L.
    #[arg(long)]
    pub lambda_max: Option<f64>,
    /// Stationarity tolerance [default: 1e-6 for SymNMF, 1e-9 for EDMC].
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, default_value_t = 10_000)]
    pub max_iters: usize,
    /// Run seeds 0..N.
    #[arg(long, conflicts_with = "seed")]
    pub seeds: Option<u64>,
    /// Run a single seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Fill the elapsed_s trace column (traces are then no longer reproducible).
    #[arg(long)]
    pub record_time: bool,
}

impl SolverArgs {
    pub fn seed_list(&self) -> Vec<u64> {
        match (self.seeds, self.seed) {
            (Some(n), _) => (0..n).collect(),
            (None, Some(s)) => vec![s],
            (None, None) => vec![0],
        }
    }
}

#[derive(Args, Debug)]
pub struct SymNmfArgs {
    /// Symmetric nonnegative matrix in Matrix Market format.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub rank: usize,
    #[arg(long, value_enum, default_value = "nolips")]
    pub algo: Algo,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Directory for trace CSV files.
    #[arg(long, default_value = "nolips-out")]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug, Clone)]
#[group(id = "source", required = true, multiple = false)]
pub struct EdmcSource {
    /// Ground-truth point CSV; distances are sampled from it.
    #[arg(long, group = "source")]
    pub points: Option<PathBuf>,
    /// Observed squared distances as `i,j,d` CSV.
    #[arg(long, group = "source")]
    pub problem: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct EdmcInput {
    #[command(flatten)]
    pub source: EdmcSource,
    /// Embedding dimension; defaults to the dimension of --points.
    #[arg(long)]
    pub rank: Option<usize>,
    /// Fraction of pairs observed when sampling from --points.
    #[arg(long, default_value_t = 0.1)]
    pub sample_rate: f64,
    /// Seed for the distance sampling (kept fixed across solver seeds).
    #[arg(long, default_value_t = 0)]
    pub sample_seed: u64,
}

#[derive(Args, Debug)]
pub struct EdmcArgs {
    #[command(flatten)]
    pub input: EdmcInput,
    #[arg(long, value_enum, default_value = "gram")]
    pub kernel: Kernel,
    #[arg(long, value_enum, default_value = "nolips")]
    pub algo: Algo,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Directory for trace CSV files.
    #[arg(long, default_value = "nolips-out")]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug)]
pub struct HelixArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Args, Debug)]
pub struct SimgraphArgs {
    /// Feature CSV, one sample per row.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "generic")]
    pub modality: ModalityArg,
    /// Neighbours kept per vertex; defaults to floor(log2 n) + 1.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Args, Debug)]
#[group(id = "bench_source", required = true, multiple = false)]
pub struct BenchSource {
    /// SymNMF input matrix (requires --rank).
    #[arg(long, group = "bench_source", requires = "rank")]
    pub input: Option<PathBuf>,
    /// EDMC ground-truth points.
    #[arg(long, group = "bench_source")]
    pub points: Option<PathBuf>,
    /// EDMC observed distances (requires --rank).
    #[arg(long, group = "bench_source", requires = "rank")]
    pub problem: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[command(flatten)]
    pub source: BenchSource,
    #[arg(long)]
    pub rank: Option<usize>,
    #[arg(long, default_value_t = 0.1)]
    pub sample_rate: f64,
    #[arg(long, default_value_t = 0)]
    pub sample_seed: u64,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "nolips,pg")]
    pub algos: Vec<Algo>,
    /// Ignored for SymNMF, which always uses the universal kernel.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "universal,gram")]
    pub kernels: Vec<Kernel>,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Combined long-format CSV.
    #[arg(long)]
    pub output: PathBuf,
}
