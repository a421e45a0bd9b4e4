use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "spgemm-bench",
    version,
    about = "SpGEMM engine, memory-access simulator and graph workloads"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalOpts {
    /// Engine worker threads [default: hardware concurrency]
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Write the JSON report here (`-` for standard output)
    #[arg(long, global = true, value_name = "PATH")]
    pub json: Option<PathBuf>,
    /// Write plot-ready CSV rows here
    #[arg(long, global = true, value_name = "PATH")]
    pub csv: Option<PathBuf>,
    /// Check results against an independent reference
    #[arg(long, global = true)]
    pub verify: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Multiply A*B (A*A when B is omitted)
    Spgemm(SpgemmArgs),
    /// Compare baseline and ranged-indirect memory traffic of A*A
    Aia(AiaArgs),
    /// Markov clustering
    Mcl(MclArgs),
    /// Contract a graph by node labels
    Contract(ContractArgs),
    /// Finite-difference check of the pruned propagation layer
    Gnncheck(GnnArgs),
    /// Manage the benchmark matrix corpus
    Corpus(CorpusArgs),
}

#[derive(Debug, Args)]
pub struct SpgemmArgs {
    pub a: PathBuf,
    pub b: Option<PathBuf>,
    /// Save the product as Matrix Market
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Time the first run instead of discarding it
    #[arg(long)]
    pub no_warmup: bool,
    /// Let worker teams share one hash table per row
    #[arg(long)]
    pub shared_tables: bool,
    /// Sort output rows with the bitonic network
    #[arg(long)]
    pub bitonic: bool,
    /// Timed repetitions; the fastest is reported
    #[arg(long, default_value_t = 1)]
    pub repeat: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PhaseArg {
    Allocation,
    Accumulation,
    Both,
}

#[derive(Debug, Args)]
pub struct AiaArgs {
    pub a: PathBuf,
    #[arg(long, value_enum, default_value_t = PhaseArg::Both)]
    pub phase: PhaseArg,
    #[arg(long, default_value_t = 128)]
    pub cache_kib: usize,
    #[arg(long, default_value_t = 64)]
    pub line_bytes: usize,
    #[arg(long, default_value_t = 4)]
    pub assoc: usize,
    /// Dump both access traces of the selected phases
    #[arg(long, value_name = "PATH")]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MclArgs {
    pub graph: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub e: u32,
    #[arg(long, default_value_t = 2.0)]
    pub r: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub theta: f64,
    /// Entries kept per column [default: all]
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = 100)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub eps: f64,
    /// Write `node cluster` lines here
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ContractArgs {
    pub graph: PathBuf,
    /// One positive label per node
    pub labels: PathBuf,
    /// Save the contracted matrix as Matrix Market
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GnnArgs {
    #[arg(long, default_value_t = 5)]
    pub n: usize,
    #[arg(long, default_value_t = 4)]
    pub f: usize,
    /// Output feature width
    #[arg(long, default_value_t = 3)]
    pub h: usize,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    #[arg(long, default_value_t = 0.3)]
    pub density: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub step: f64,
    #[arg(long, default_value_t = 1e-5)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    #[command(subcommand)]
    pub action: CorpusAction,
}

#[derive(Debug, Subcommand)]
pub enum CorpusAction {
    /// Download matrices into the corpus directory
    Fetch(CorpusSelect),
    /// Check shapes and self-product counts against the published figures
    Verify(CorpusSelect),
    /// List registered matrices and whether they are present
    List(CorpusSelect),
}

#[derive(Debug, Args)]
pub struct CorpusSelect {
    /// Matrix names [default: all]
    pub names: Vec<String>,
    /// Use a JSON manifest instead of the built-in registry
    #[arg(long, value_name = "PATH")]
    pub manifest: Option<PathBuf>,
}
