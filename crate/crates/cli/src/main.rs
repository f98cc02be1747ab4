//! `degulab`: build the layered construction, check pairs and partitions,
//! round weighted graphs, and emit reproducible reports.
//!
//! Exit status: 0 when the command ran and its checks passed, 2 when a check
//! ran and failed, 1 on usage or runtime errors.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "degulab", version, about = "Degular partition construction and verification workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Build G(n, s, delta) and write it with a manifest.
    Construct(ConstructArgs),
    /// Rebuild a bundle and run every structural audit on it.
    Verify(BundleArgs),
    /// Degularity (and optionally regularity) verdict for one pair.
    CheckPair(CheckPairArgs),
    /// Degular-partition verdict (P1 plus degree and aggregate forms).
    CheckPartition(CheckPartitionArgs),
    /// Smallest complexity with a degular partition.
    Search(SearchArgs),
    /// Refinement cascade audit of a partition against a bundle.
    CascadeAudit(CascadeArgs),
    /// Randomized rounding of a weighted graph.
    Round(RoundArgs),
    /// Sampled density-deviation audit of a rounding.
    AuditRound(AuditRoundArgs),
    /// Embed a simple graph into an almost-regular host of twice the order.
    Embed(EmbedArgs),
    /// Random equipartition and its degularity verdict.
    Equipartition(EquipartitionArgs),
    /// Build and verify an (M, D)-separator, or verify one from a file.
    Separator(SeparatorArgs),
    /// Print the level schedule m_r, M_r, D_r.
    Schedule(ScheduleArgs),
    /// Run the toy pipeline and write JSON and CSV plot data.
    Report(ReportArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Args, Debug, Clone, Serialize)]
struct BundleArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    s: usize,
    #[arg(long)]
    delta: f64,
    #[arg(long = "c-exp", default_value_t = 9999)]
    c_exp: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// One separator per (level, cell) instead of one per level.
    #[arg(long)]
    per_block: bool,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args, Debug, Serialize)]
struct ConstructArgs {
    #[command(flatten)]
    #[serde(flatten)]
    bundle: BundleArgs,
    /// Output graph (DGL1); the manifest goes next to it as `<stem>.manifest.json`.
    #[arg(long)]
    out: PathBuf,
    /// Keep only the total graph in memory.
    #[arg(long)]
    total_only: bool,
}

#[derive(Args, Debug, Serialize)]
struct GraphInput {
    /// Graph file: `.dgl`, `.csv` (u,v,w), or an edge list.
    #[arg(long)]
    graph: PathBuf,
    /// Vertex count for formats that do not store it.
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Args, Debug, Serialize)]
struct CheckPairArgs {
    #[command(flatten)]
    #[serde(flatten)]
    input: GraphInput,
    /// JSON list of vertices.
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    #[arg(long)]
    eps: f64,
    /// Also run the exhaustive regularity check (|A|, |B| <= 12).
    #[arg(long)]
    regular: bool,
}

#[derive(Args, Debug, Serialize)]
struct CheckPartitionArgs {
    #[command(flatten)]
    #[serde(flatten)]
    input: GraphInput,
    /// Partition JSON {"n", "ell", "assign"}.
    #[arg(long)]
    partition: PathBuf,
    #[arg(long)]
    eps: f64,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
enum ModeArg {
    Exhaustive,
    LocalSearch,
}

#[derive(Args, Debug, Serialize)]
struct SearchArgs {
    #[command(flatten)]
    #[serde(flatten)]
    input: GraphInput,
    #[arg(long)]
    eps: f64,
    #[arg(long, value_enum, default_value_t = ModeArg::Exhaustive)]
    mode: ModeArg,
    #[arg(long, default_value_t = 10_000_000)]
    budget: u64,
    #[arg(long, default_value_t = 4)]
    restarts: usize,
    #[arg(long, default_value_t = 2_000)]
    steps: u64,
    #[arg(long, default_value_t = 1.0)]
    temperature: f64,
    #[arg(long, default_value_t = 0.99)]
    cooling: f64,
    /// Starting partition for local search.
    #[arg(long)]
    start: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the partition found here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct CascadeArgs {
    #[command(flatten)]
    #[serde(flatten)]
    bundle: BundleArgs,
    /// Partition to audit; defaults to the level partition given by --level.
    #[arg(long)]
    partition: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    level: usize,
    #[arg(long)]
    eps: f64,
    #[arg(long, default_value_t = 0.0)]
    beta: f64,
    #[arg(long, default_value_t = 0.001)]
    mu: f64,
    #[arg(long, default_value_t = 1 << 20)]
    n_floor: usize,
}

#[derive(Args, Debug, Serialize)]
struct RoundArgs {
    #[command(flatten)]
    #[serde(flatten)]
    input: GraphInput,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Redraw up to this many times until the sampled audit passes.
    #[arg(long, default_value_t = 0)]
    retries: usize,
    #[arg(long, default_value_t = 0.1)]
    zeta: f64,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long)]
    min_size: Option<usize>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
enum LogBaseArg {
    E,
    Two,
    Ten,
}

#[derive(Args, Debug, Serialize)]
struct AuditRoundArgs {
    #[arg(long)]
    weighted: PathBuf,
    #[arg(long)]
    simple: PathBuf,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    zeta: f64,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    /// Defaults to ceil(20 zeta^-2 log n).
    #[arg(long)]
    min_size: Option<usize>,
    #[arg(long, value_enum, default_value_t = LogBaseArg::E)]
    log_base: LogBaseArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug, Serialize)]
struct EmbedArgs {
    #[command(flatten)]
    #[serde(flatten)]
    input: GraphInput,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct EquipartitionArgs {
    #[command(flatten)]
    #[serde(flatten)]
    input: GraphInput,
    /// Number of clusters L.
    #[arg(long)]
    parts: usize,
    #[arg(long)]
    eps: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct SeparatorArgs {
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long = "c-exp", default_value_t = 9999)]
    c_exp: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    retry_cap: usize,
    /// Verify this separator JSON instead of building one.
    #[arg(long)]
    verify: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct ScheduleArgs {
    #[arg(long)]
    s: usize,
    #[arg(long = "c-exp", default_value_t = 9999)]
    c_exp: u64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args, Debug, Serialize)]
struct ReportArgs {
    #[command(flatten)]
    #[serde(flatten)]
    bundle: BundleArgs,
    #[arg(long, default_value_t = 0.05)]
    eps: f64,
    #[arg(long, default_value_t = 0.001)]
    mu: f64,
    /// Directory for report.json, degree_sums.csv, and cascade.csv.
    #[arg(long)]
    out_dir: PathBuf,
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(raw) = std::env::var("DEGULAB_THREADS") {
        let threads: usize = raw
            .parse()
            .map_err(|_| anyhow::anyhow!("DEGULAB_THREADS must be a positive integer, got {raw:?}"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(1);
    }
    match commands::run(&cli.command) {
        Ok(commands::Outcome::Pass) => ExitCode::SUCCESS,
        Ok(commands::Outcome::Fail) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
