use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

#[derive(Debug, Parser)]
#[command(name = "concept-engine", version, about = "Concept dictionaries, sparse decomposition and activation steering")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Global {
    /// TOML configuration file
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Root seed (overrides the config)
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Directory for written artifacts
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Exit with status 4 when any solve misses its tolerance
    #[arg(long, global = true)]
    pub strict: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract a dictionary from stimulus activations
    BuildDict {
        #[arg(long)]
        stimuli: PathBuf,
        #[arg(long)]
        max_pairs: Option<usize>,
    },
    /// Check unit norms, finiteness and name uniqueness of a saved dictionary
    ValidateDict {
        #[arg(long)]
        dict: PathBuf,
    },
    /// Partition operations
    Partition {
        #[command(subcommand)]
        action: PartitionCommand,
    },
    /// Sparse decomposition of one frame
    Decompose {
        #[arg(long)]
        dict: PathBuf,
        #[arg(long)]
        frames: PathBuf,
        /// Index of the frame to decompose
        #[arg(long, default_value_t = 0)]
        frame: usize,
        #[arg(long, default_value_t = 20)]
        top: usize,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Apply an intervention to every frame
    Intervene {
        #[arg(long)]
        dict: PathBuf,
        #[arg(long)]
        frames: PathBuf,
        /// Comma-separated undesirable concept ids
        #[arg(long, value_delimiter = ',')]
        undesirable: Vec<usize>,
        /// Select undesirable concepts from a partition file instead
        #[arg(long, conflicts_with = "undesirable")]
        partition: Option<PathBuf>,
        #[arg(long, default_value_t = 50)]
        top_k: usize,
        #[arg(long, default_value = "obliq_proj")]
        method: concept_engine::Method,
        #[arg(long, default_value_t = 1.0)]
        strength: f64,
        #[arg(long)]
        reuse: bool,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Most similar concepts in the reduced space
    Retrieve {
        #[arg(long)]
        dict: PathBuf,
        /// Concept id or name
        #[arg(long)]
        query: String,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long)]
        energy: Option<f64>,
    },
    /// Reduce the dictionary and export the embedding
    Reduce {
        #[arg(long)]
        dict: PathBuf,
        #[arg(long)]
        energy: Option<f64>,
    },
    /// Subspace clustering of the reduced concepts
    Cluster {
        #[arg(long)]
        dict: PathBuf,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        tau_c: Option<f64>,
        #[arg(long)]
        energy: Option<f64>,
    },
    /// Generate a synthetic dictionary and planted frames
    Synth {
        #[command(flatten)]
        spec: SynthArgs,
    },
    /// Time the solver on synthetic problems
    Bench {
        #[command(flatten)]
        spec: SynthArgs,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Run the configured pipeline
    Run,
}

#[derive(Debug, Subcommand)]
pub enum PartitionCommand {
    /// Pick the top-k undesirable concepts
    Select {
        /// Partition JSONL; omit to label the dictionary's names by keyword
        #[arg(long)]
        partition: Option<PathBuf>,
        #[arg(long, required_unless_present = "partition")]
        dict: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        keywords: Vec<String>,
        #[arg(long, default_value = "task")]
        task_id: String,
        #[arg(long, default_value_t = 50)]
        k: usize,
    },
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub layers: Option<usize>,
    /// Planted support size
    #[arg(long)]
    pub s: Option<usize>,
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long, requires = "subspace_dim")]
    pub subspaces: Option<usize>,
    #[arg(long)]
    pub subspace_dim: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::dispatch(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
