use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "dcsbm", version, about = "Exact and heuristic maximum-likelihood community detection for the degree-corrected SBM")]
pub struct Cli {
    /// Base seed; all instance and trial seeds are derived from it (required by generate and bench)
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads [default: available parallelism]; 1 gives bitwise-reproducible output
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// TOML file of flag defaults; top-level keys are global flags, [<subcommand>] tables hold subcommand flags. Command-line flags win
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Directory for commands that write several files
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    pub out_dir: PathBuf,

    /// Progress on stderr (-v info, -vv debug)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample instances and write them with a manifest
    Generate(GenerateArgs),
    /// Solve one instance
    Solve(SolveArgs),
    /// Write the MILP model in LP format plus a cut sidecar
    ExportMilp(ExportArgs),
    /// Metrics over solutions and benchmark results
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Run the benchmark harness over a suite
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

impl Switch {
    pub fn on(self) -> bool {
        self == Switch::On
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SuiteArg {
    S1,
    S2,
    #[value(name = "s1-desk")]
    S1Desk,
    #[value(name = "s2-desk")]
    S2Desk,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrengthArg {
    Low,
    Medium,
    High,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Suite to generate
    #[arg(long, value_enum, default_value = "custom")]
    pub suite: SuiteArg,

    /// Replicates per suite cell
    #[arg(long, default_value_t = 10)]
    pub replicates: usize,

    /// Vertices (custom suite)
    #[arg(long)]
    pub n: Option<usize>,

    /// Communities (custom suite)
    #[arg(long)]
    pub k: Option<usize>,

    /// Within-community affinity (custom suite, K = 2)
    #[arg(long, requires = "omega_out")]
    pub omega_in: Option<f64>,

    /// Between-community affinity (custom suite, K = 2)
    #[arg(long, requires = "omega_in")]
    pub omega_out: Option<f64>,

    /// Community strength (custom suite)
    #[arg(long, value_enum, conflicts_with = "omega_in")]
    pub strength: Option<StrengthArg>,

    /// Instances to draw (custom suite)
    #[arg(long, default_value_t = 1)]
    pub count: usize,

    /// Keep draws with isolated vertices
    #[arg(long)]
    pub keep_isolated: bool,

    /// Keep draws whose ground truth leaves a community empty
    #[arg(long)]
    pub allow_empty_groups: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Exact,
    #[value(name = "em-ls1")]
    EmLs1,
    #[value(name = "em-ls2")]
    EmLs2,
    #[value(name = "em-exact")]
    EmExact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OrderArg {
    Degree,
    Input,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Instance file
    pub input: PathBuf,

    #[arg(long, value_enum, default_value = "exact")]
    pub method: MethodArg,

    /// Seconds for the exact search, or per E-step for em-exact; `inf` for none
    #[arg(long, default_value_t = 60.0)]
    pub time_limit: f64,

    /// Random restarts for EM methods
    #[arg(long, default_value_t = 50)]
    pub trials: usize,

    /// Restrict the exact search to canonical labellings
    #[arg(long, value_enum, default_value = "on")]
    pub sbc: Switch,

    /// Branching order of the exact search
    #[arg(long, value_enum, default_value = "degree")]
    pub vertex_order: OrderArg,

    /// Skip the EM-LS2 warm start of the exact search
    #[arg(long)]
    pub no_warm_start: bool,

    /// Relocation cap per EM trial
    #[arg(long, default_value_t = 10_000)]
    pub max_relocations: usize,

    /// Reference objective for EM gaps [default: best trial]
    #[arg(long)]
    pub bks: Option<f64>,

    /// Solution file [default: stdout]
    #[arg(long, short)]
    pub output: Option<PathBuf>,

    /// Results CSV (one row for exact, one per trial for EM)
    #[arg(long)]
    pub csv: Option<PathBuf>,

    /// Progress trace as JSON lines
    #[arg(long)]
    pub trace: Option<PathBuf>,

    /// Write every timing field as 0
    #[arg(long)]
    pub omit_timings: bool,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    /// Instance file
    pub input: PathBuf,
    /// Model file; the cut sidecar goes to `<model>.cuts`
    pub output: PathBuf,

    /// Log-spaced tangent breakpoints per pair
    #[arg(long, default_value_t = 8)]
    pub breakpoints: usize,

    /// Separation tolerance recorded in the sidecar
    #[arg(long, default_value_t = 1e-6)]
    pub epsilon: f64,

    /// Emit symmetry-breaking rows
    #[arg(long, value_enum, default_value = "on")]
    pub sbc: Switch,
}

#[derive(Debug, Subcommand)]
pub enum EvalCommand {
    /// Agreement of solutions with an instance's ground truth
    Agreement(AgreementArgs),
    /// Gaps of solutions against the best known objective
    Gap(GapArgs),
    /// Agreement and speedup charts (SVG) from benchmark results
    Plot(ResultsArgs),
    /// Rebuild result tables from benchmark results
    Tables(ResultsArgs),
}

#[derive(Debug, Args)]
pub struct AgreementArgs {
    /// Instance carrying the ground truth
    #[arg(long)]
    pub instance: PathBuf,
    /// Solution files
    #[arg(required = true)]
    pub solutions: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GapArgs {
    /// Solution files of one instance
    #[arg(required = true)]
    pub solutions: Vec<PathBuf>,
    /// Extra reference objective folded into the BKS
    #[arg(long)]
    pub bks: Option<f64>,
    /// Instance id written to the records
    #[arg(long, default_value = "instance")]
    pub instance_id: String,
}

#[derive(Debug, Args)]
pub struct ResultsArgs {
    /// Directory written by `bench`
    #[arg(long)]
    pub results: PathBuf,
    /// Manifest of the benchmarked suite [default: <results>/instances/manifest.csv]
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Suite name (s1, s2, s1-desk, s2-desk; generated under <out-dir>/instances), a suite directory, or a manifest file
    #[arg(long)]
    pub suite: String,

    /// Comma-separated methods
    #[arg(long, value_enum, value_delimiter = ',', default_value = "exact,em-ls1,em-ls2,em-exact")]
    pub methods: Vec<MethodArg>,

    /// Seconds for the exact search, or per E-step for em-exact; `inf` for none
    #[arg(long, default_value_t = 60.0)]
    pub time_limit: f64,

    /// Random restarts per EM method and instance
    #[arg(long, default_value_t = 50)]
    pub trials: usize,

    #[arg(long, value_enum, default_value = "on")]
    pub sbc: Switch,

    /// Replicates per cell when generating a named suite
    #[arg(long, default_value_t = 10)]
    pub replicates: usize,

    /// Write every timing field as 0
    #[arg(long)]
    pub omit_timings: bool,
}
