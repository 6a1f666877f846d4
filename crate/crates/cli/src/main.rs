//! `hypercomm` command-line tool: generate planted hypergraphs, detect
//! communities, score labelings and run benchmark grids.

mod commands;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hypercomm::Tunable;

use crate::error::{usage, CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "hypercomm", version, about = "Community detection in general hypergraphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample a planted-partition hypergraph with its true labels and embedding.
    Generate(GenerateArgs),
    /// Fit the embedding model to a hyperedge list and write community labels.
    Detect(DetectArgs),
    /// Score predicted labels (and optionally embeddings) against the truth.
    Eval(EvalArgs),
    /// Run a replicated benchmark grid and write the result table.
    Bench(BenchArgs),
    /// Re-run the command recorded in a manifest.
    Replay {
        manifest: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub scenario: u8,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = 3)]
    pub m: usize,
    #[arg(long)]
    pub r: usize,
    #[arg(long)]
    pub sn: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output prefix; writes PREFIX.hg, PREFIX.labels, PREFIX.alpha.csv, PREFIX.manifest.json.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub r: usize,
    /// Sparsity factor, or `auto` for the edge density of the input.
    #[arg(long, default_value = "auto")]
    pub sn: Tunable,
    #[arg(long, default_value = "auto")]
    pub lambda0: Tunable,
    #[arg(long, default_value = "auto")]
    pub lambda1: Tunable,
    /// Initial learning rate, or `auto` for n / s_n.
    #[arg(long, default_value = "auto")]
    pub eta: Tunable,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 500)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Replace hyperedges larger than M by all their M-subsets.
    #[arg(long, value_name = "M")]
    pub clique_expand: Option<usize>,
    #[arg(long)]
    pub min_size: Option<usize>,
    #[arg(long)]
    pub max_size: Option<usize>,
    /// Output prefix; writes PREFIX.labels, PREFIX.alpha.csv, PREFIX.trace.csv, PREFIX.manifest.json.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub k: usize,
    #[arg(long, requires_all = ["alpha_pred", "sn", "m"])]
    pub alpha_true: Option<PathBuf>,
    #[arg(long, requires = "alpha_true")]
    pub alpha_pred: Option<PathBuf>,
    #[arg(long)]
    pub sn: Option<f64>,
    #[arg(long)]
    pub m: Option<usize>,
    /// Print a JSON object instead of text.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub scenario: u8,
    #[arg(long, value_delimiter = ',', required = true)]
    pub n_list: Vec<usize>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub sn_list: Vec<f64>,
    #[arg(long, default_value_t = 50)]
    pub reps: usize,
    /// Comma-separated subset of hem, wptg, shp.
    #[arg(long, default_value = "hem,wptg,shp")]
    pub methods: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    #[arg(long, default_value_t = 3)]
    pub m: usize,
    #[arg(long, default_value_t = 10)]
    pub r: usize,
    /// Ridge weight for the embedding fit, or `auto`.
    #[arg(long, default_value = "auto")]
    pub lambda0: Tunable,
    #[arg(long, default_value = "auto")]
    pub lambda1: Tunable,
    #[arg(long, default_value = "auto")]
    pub eta: Tunable,
    /// Output prefix; writes PREFIX.csv, PREFIX.json, PREFIX.manifest.json.
    #[arg(long)]
    pub out: PathBuf,
}

/// `HYPERCOMM_THREADS`: unset uses every core, 0 means serial mode.
fn thread_setting() -> CliResult<Option<usize>> {
    match std::env::var("HYPERCOMM_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(t) => Ok(Some(t)),
            Err(_) => usage(format!("HYPERCOMM_THREADS must be a non-negative integer, got {v:?}")),
        },
    }
}

fn init_threads() -> CliResult<usize> {
    let setting = thread_setting()?;
    if let Some(t) = setting {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build_global()
            .map_err(|e| CliError::Usage(format!("configuring threads: {e}")))?;
    }
    Ok(match setting {
        Some(t) => t,
        None => rayon::current_num_threads(),
    })
}

fn dispatch(command: Command, args: &[String], threads: usize) -> CliResult<()> {
    match command {
        Command::Generate(a) => commands::generate(&a, args, threads),
        Command::Detect(a) => commands::detect(&a, args, threads),
        Command::Eval(a) => commands::eval(&a),
        Command::Bench(a) => commands::bench(&a, args, threads),
        Command::Replay { manifest } => {
            let recorded = manifest::RunManifest::read(&manifest)?;
            let argv = std::iter::once("hypercomm".to_string()).chain(recorded.args.iter().cloned());
            let cli = Cli::try_parse_from(argv).map_err(|e| CliError::Usage(format!("manifest arguments: {e}")))?;
            if matches!(cli.command, Command::Replay { .. }) {
                return usage("a manifest cannot record another replay");
            }
            dispatch(cli.command, &recorded.args, threads)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args: Vec<String> = std::env::args().skip(1).collect();
    let cli = Cli::parse();
    let result = init_threads().and_then(|threads| dispatch(cli.command, &args, threads));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hypercomm: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
