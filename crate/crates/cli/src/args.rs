//! Command-line surface.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "routeproj", version, about = "Projection-aware KNN route construction: generate, solve, evolve, benchmark")]
pub struct Cli {
    /// Flat `key = value` file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads for instance-level parallelism.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Round edge costs to the nearest integer, as TSPLIB EUC_2D does.
    #[arg(long, global = true)]
    pub tsplib_rounding: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic instances.
    Gen(GenArgs),
    /// Construct solutions and report reference gaps.
    Solve(SolveArgs),
    /// Search for a projection program.
    Evolve(EvolveArgs),
    /// Compare methods across scales.
    Bench(BenchArgs),
    /// Run an exact or reference solver.
    Oracle(OracleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Tsp,
    Cvrp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DistArg {
    Uniform,
    Clustered,
    Explosion,
    Implosion,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReferenceArg {
    /// Exact when small enough, 2-opt otherwise.
    Auto,
    Exact,
    TwoOpt,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GeneratorArg {
    Mock,
    Llm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolverArg {
    /// Held-Karp (TSP) or exhaustive search (CVRP).
    Exact,
    TwoOpt,
    RandomInsertion,
    NearestNeighbor,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    pub kind: KindArg,
    /// Cities (TSP) or customers (CVRP).
    pub n: usize,
    #[arg(default_value = "uniform")]
    pub distribution: DistArg,
    /// Instance count; defaults follow the usual test-set sizes per scale.
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long)]
    pub capacity: Option<u32>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "instances")]
    pub out: PathBuf,
}

/// Options shared by everything that constructs solutions.
#[derive(Debug, Args, Clone)]
pub struct SolverArgs {
    /// Policy: scale-sensitive or isometry-invariant.
    #[arg(long)]
    pub policy: Option<String>,
    /// Neighbours per step.
    #[arg(long)]
    pub k: Option<usize>,
    /// Fuse decisions over the unit-square symmetry views.
    #[arg(long)]
    pub mvdf: bool,
    /// Comma-separated view indices (0..8) for fusion; implies --mvdf.
    #[arg(long, value_delimiter = ',')]
    pub views: Option<Vec<usize>>,
    /// Sample from the fused distribution instead of taking the argmax.
    #[arg(long)]
    pub mvdf_sample: bool,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Instance files or directories.
    #[arg(required = true)]
    pub instances: Vec<PathBuf>,
    /// `auto`, a built-in or registered name, or a strategy JSON file.
    #[arg(long)]
    pub strategy: Option<String>,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Random re-construction iterations after construction.
    #[arg(long)]
    pub rrc: Option<usize>,
    #[arg(long, value_enum)]
    pub reference: Option<ReferenceArg>,
    /// Directory of `<name>.sol` reference solutions; overrides --reference.
    #[arg(long)]
    pub reference_dir: Option<PathBuf>,
    #[arg(long, default_value = "solutions")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvolveArgs {
    #[arg(long, value_enum, default_value = "tsp")]
    pub kind: KindArg,
    /// Evaluation instance size.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, value_enum, default_value = "uniform")]
    pub distribution: DistArg,
    /// Generated evaluation instances.
    #[arg(long)]
    pub eval_count: Option<usize>,
    /// Use these instance files instead of generating an evaluation set.
    #[arg(long)]
    pub eval_dir: Option<PathBuf>,
    #[arg(long)]
    pub population: Option<usize>,
    #[arg(long)]
    pub generations: Option<usize>,
    #[arg(long, value_enum)]
    pub generator: Option<GeneratorArg>,
    /// Produce N offspring per operator rather than N per generation.
    #[arg(long)]
    pub offspring_per_operator: bool,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Also compare best and seed programs at these sizes.
    #[arg(long, value_delimiter = ',')]
    pub transfer: Vec<usize>,
    #[arg(long, default_value_t = 4)]
    pub transfer_count: usize,
    #[arg(long, default_value_t = 60)]
    pub llm_timeout_secs: u64,
    #[arg(long, default_value_t = 2)]
    pub llm_retries: usize,
    #[arg(long, default_value_t = 1.0)]
    pub llm_temperature: f64,
    #[arg(long, default_value = "evolve_out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_enum, default_value = "tsp")]
    pub kind: KindArg,
    /// Comma-separated instance sizes.
    #[arg(long, value_delimiter = ',', default_value = "1000")]
    pub scales: Vec<usize>,
    /// Instances per scale.
    #[arg(long, default_value_t = 4)]
    pub count: usize,
    #[arg(long, value_enum, default_value = "uniform")]
    pub distribution: DistArg,
    /// Strategy file for the evolved row; defaults to the per-scale built-in.
    #[arg(long)]
    pub evolved: Option<PathBuf>,
    #[arg(long)]
    pub policy: Option<String>,
    #[arg(long)]
    pub k: Option<usize>,
    /// Re-construction budget of the RRC rows.
    #[arg(long)]
    pub rrc: Option<usize>,
    #[arg(long, value_enum)]
    pub reference: Option<ReferenceArg>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "bench_out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(required = true)]
    pub instances: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "exact")]
    pub solver: SolverArg,
    /// 2-opt pass budget.
    #[arg(long, default_value_t = 1000)]
    pub passes: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "oracle_out")]
    pub out: PathBuf,
}
