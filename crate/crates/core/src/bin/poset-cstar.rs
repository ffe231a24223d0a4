use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use poset_cstar::cli::{
    error_exit_code, error_report, run, DecomposeConfig, EmbeddingConfig, Example, NormsConfig, RunConfig,
    TopologyConfig,
};
use poset_cstar::poset::PosetFile;
use poset_cstar::semigroup::PrimeSequence;
use poset_cstar::Error;

/// Maximal directed subsets, index topologies and finite checks of the
/// Toeplitz embedding. Reports are JSON; exit code 0 means every check
/// passed, 1 a failed check, 2 bad input.
#[derive(Parser, Debug)]
#[command(name = "poset-cstar", version)]
struct Cli {
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Maximal upward directed subsets of a poset file.
    Decompose { poset: PathBuf },
    /// Base sets, T1 check, isolated points and neighbourhood chains.
    Topology {
        poset: Option<PathBuf>,
        #[arg(long)]
        example: Option<Example>,
        #[arg(long)]
        resolution: Option<u64>,
        #[arg(long, default_value_t = 2)]
        depth: usize,
    },
    /// Truncated-matrix and symbol norms of a polynomial in `T`.
    Norms {
        #[arg(long)]
        poly: String,
        #[arg(long = "dim", short = 'N')]
        dim: usize,
        #[arg(long)]
        grid: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// All embedding checks on a neighbourhood chain of the circle example.
    VerifyEmbedding(EmbeddingArgs),
}

#[derive(Args, Debug)]
struct EmbeddingArgs {
    /// JSON file with any of the fields below; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    example: Option<Example>,
    #[arg(long)]
    resolution: Option<u64>,
    #[arg(long)]
    depth: Option<usize>,
    /// `2,3,5,...`, `increasing` or `every-prime-infinitely-often`.
    #[arg(long)]
    primes: Option<PrimeSequence>,
    #[arg(long)]
    trunc: Option<usize>,
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    point: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    sums: Option<usize>,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Error> {
    let text = fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn embedding_config(args: EmbeddingArgs) -> Result<EmbeddingConfig, Error> {
    let mut c: EmbeddingConfig = match &args.config {
        Some(path) => read_json(path)?,
        None => EmbeddingConfig::default(),
    };
    macro_rules! apply {
        ($($field:ident),*) => {
            $(if let Some(v) = args.$field { c.$field = v; })*
        };
    }
    apply!(example, resolution, depth, primes, trunc, grid, point, seed, sums);
    Ok(c)
}

fn build(command: Command) -> Result<RunConfig, Error> {
    Ok(match command {
        Command::Decompose { poset } => RunConfig::Decompose(DecomposeConfig {
            poset: read_json::<PosetFile>(&poset)?,
        }),
        Command::Topology {
            poset,
            example,
            resolution,
            depth,
        } => RunConfig::Topology(TopologyConfig {
            poset: poset.as_deref().map(read_json).transpose()?,
            example,
            resolution,
            depth,
        }),
        Command::Norms { poly, dim, grid, tol } => RunConfig::Norms(NormsConfig { poly, dim, grid, tol }),
        Command::VerifyEmbedding(args) => RunConfig::VerifyEmbedding(embedding_config(args)?),
    })
}

fn command_label(command: &Command) -> &'static str {
    match command {
        Command::Decompose { .. } => "decompose",
        Command::Topology { .. } => "topology",
        Command::Norms { .. } => "norms",
        Command::VerifyEmbedding(_) => "verify-embedding",
    }
}

fn emit(text: &str, output: Option<&Path>) -> std::io::Result<()> {
    match output {
        Some(path) => fs::write(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let label = command_label(&cli.command);
    let result = build(cli.command).and_then(|config| run(&config));
    let (text, code) = match result {
        Ok(outcome) => (outcome.render(), outcome.exit_code()),
        Err(e) => {
            eprintln!("error: {e}");
            let mut text = serde_json::to_string_pretty(&error_report(label, &e)).expect("json");
            text.push('\n');
            (text, error_exit_code(&e))
        }
    };
    if let Err(e) = emit(&text, cli.output.as_deref()) {
        eprintln!("error: cannot write report: {e}");
        return ExitCode::from(2);
    }
    ExitCode::from(code as u8)
}
