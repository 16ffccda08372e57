use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

pub const OUT_DIR_ENV: &str = "MPNN_WALKS_OUT_DIR";

const SYNTHETIC_HELP: &str = "Synthetic graph as kind[:key=value,...]. Kinds: \
erdos-renyi:n=N,p=P (alias er), path:n=N, cycle:n=N, star:leaves=L, complete:n=N, \
fig2-leaf-on-hub, fig2-deg2-node, fig2-star3, and \
er-corpus[:count=C,min-n=A,max-n=B,min-p=P,max-p=Q,no-isolated=true] for a corpus \
with random sizes and densities";

#[derive(Debug, Parser)]
#[command(name = "mpnn-walks", version, about = "Walk censuses and message passing layers under uniform node features")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Raw walk counts and normalized walk sums for lengths 0..=k.
    Walks(CommonArgs),
    /// Node representations at every layer of a randomly initialized model.
    Embed(CommonArgs),
    /// Checks collapse (DGCNN, GAT) or proportionality and the walk bound (GCN, GIN-0).
    Verify(CommonArgs),
    /// Correlates layer-k embedding distances with walk distances over all node pairs.
    Correlate(CommonArgs),
    /// Finds nodes with equal walk counts.
    Collide(CommonArgs),
    /// Per-layer Lipschitz constants of a model.
    Lipschitz(CommonArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Walks(_) => "walks",
            Command::Embed(_) => "embed",
            Command::Verify(_) => "verify",
            Command::Correlate(_) => "correlate",
            Command::Collide(_) => "collide",
            Command::Lipschitz(_) => "lipschitz",
        }
    }

    pub fn args(&self) -> &CommonArgs {
        match self {
            Command::Walks(a)
            | Command::Embed(a)
            | Command::Verify(a)
            | Command::Correlate(a)
            | Command::Collide(a)
            | Command::Lipschitz(a) => a,
        }
    }
}

#[derive(Debug, Args)]
#[group(id = "input", multiple = false)]
pub struct InputArgs {
    /// Edge-list file: one `u v` pair per line, 0-based ids, `#` comments.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// Directory holding a TU-format dataset (`*_A.txt`, `*_graph_indicator.txt`).
    #[arg(long)]
    pub tu_dir: Option<PathBuf>,
    #[arg(long, help = SYNTHETIC_HELP)]
    pub synthetic: Option<String>,
    /// The three built-in equal-walk-count graphs.
    #[arg(long)]
    pub builtin_fig2: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Gcn,
    Dgcnn,
    Gat,
    /// GIN with epsilon = 0
    Gin0,
    Gin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BiasArg {
    Zero,
    RandomSmall,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum IsolatedArg {
    Error,
    ZeroRow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum)]
    pub model: Option<ModelKind>,
    /// GIN only.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long, default_value_t = 3)]
    pub depth: usize,
    #[arg(long, default_value_t = 8)]
    pub width: usize,
    /// GIN only: linear layers per MLP.
    #[arg(long, default_value_t = 2)]
    pub mlp_layers: usize,
    /// GIN only.
    #[arg(long, value_enum, default_value_t = BiasArg::Zero)]
    pub bias: BiasArg,
    /// GAT only: handling of nodes without neighbors.
    #[arg(long, value_enum, default_value_t = IsolatedArg::Error)]
    pub isolated: IsolatedArg,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Number of synthetic graphs; graph i uses seed + i.
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Walk length / layer. Defaults to 3, or the model depth if smaller.
    #[arg(long)]
    pub k: Option<usize>,
    /// Overrides every check tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, env = OUT_DIR_ENV, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// collide: keep only groups whose nodes have at least two distinct degrees.
    #[arg(long)]
    pub require_distinct_degrees: bool,
}
