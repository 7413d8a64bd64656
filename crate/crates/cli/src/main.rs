mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use assocnet::NormMode;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "assocnet", version, about = "Free-association norms, semantic networks and spreading activation")]
#[command(arg_required_else_help = true)]
struct Cli {
    /// Worker threads for parallel activation (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// More log output; repeat for more.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    /// Only log errors.
    #[arg(short, long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

/// Settings shared by the analysis commands.
#[derive(Args, Debug, Clone, Default)]
struct RunArgs {
    /// Run configuration file (flat TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed for the balancing sampler.
    #[arg(long)]
    seed: Option<u64>,
    /// Lexicon directory (words.txt, lemmas.tsv, spelling.tsv, compounds.tsv).
    #[arg(long)]
    lexicon: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default)]
struct ActArgs {
    /// Fraction of activation each node keeps per step.
    #[arg(long)]
    retention: Option<f64>,
    #[arg(long)]
    decay: Option<f64>,
    /// Activations below this value are zeroed after each step.
    #[arg(long)]
    suppress: Option<f64>,
    /// Initial activation of the prime (default: node count).
    #[arg(long)]
    initial: Option<f64>,
    /// Number of steps (default: twice the diameter).
    #[arg(long)]
    iterations: Option<usize>,
    /// Spread evenly over neighbors instead of by edge weight.
    #[arg(long)]
    unweighted: bool,
    /// Normalization mode: l1, max or zscore.
    #[arg(long)]
    normalization: Option<NormMode>,
}

#[derive(Subcommand)]
enum Command {
    /// Clean a raw norms CSV and balance it to 100 rows per cue.
    Preprocess {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Build the reduced undirected network from a cleaned norms CSV.
    BuildNet {
        #[arg(long)]
        input: PathBuf,
        /// Reduced network edge list.
        #[arg(long)]
        output: PathBuf,
        /// Also write the unreduced network here.
        #[arg(long)]
        full_output: Option<PathBuf>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Print node count, edge count, density and average degree as JSON.
    NetStats {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Node and edge overlap of two networks, as JSON.
    CompareNets {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Spread activation from each prime and write the node × prime matrix.
    Activate {
        #[arg(long)]
        network: PathBuf,
        /// Comma-separated primes.
        #[arg(long, value_delimiter = ',', required_unless_present = "primes_file")]
        primes: Vec<String>,
        /// File with one prime per line.
        #[arg(long)]
        primes_file: Option<PathBuf>,
        #[arg(long)]
        output: PathBuf,
        /// Write normalized levels instead of raw activation.
        #[arg(long)]
        normalized: bool,
        #[command(flatten)]
        act: ActArgs,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Lexical-decision priming validation.
    PrimeExperiment {
        #[arg(long)]
        network: PathBuf,
        /// Item CSV (default: the bundled 50 items).
        #[arg(long)]
        items: Option<PathBuf>,
        #[arg(long)]
        output_dir: PathBuf,
        #[command(flatten)]
        act: ActArgs,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Gender-stereotype probe.
    BiasProbe {
        #[arg(long)]
        network: PathBuf,
        /// Probe JSON (default: the bundled probe).
        #[arg(long)]
        probe: Option<PathBuf>,
        /// Second network for cross-model correlation.
        #[arg(long)]
        compare_with: Option<PathBuf>,
        #[arg(long)]
        output_dir: PathBuf,
        #[command(flatten)]
        act: ActArgs,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Collect association norms from a chat model.
    Generate {
        /// One cue per line.
        #[arg(long)]
        cues: PathBuf,
        /// Generation configuration (TOML).
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// JSON-lines request log.
        #[arg(long)]
        log: PathBuf,
        /// Continue the run recorded in --log.
        #[arg(long)]
        resume: bool,
    },
    /// preprocess → dataset stats → build-net → experiments.
    Pipeline {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        #[command(flatten)]
        act: ActArgs,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Build lexicon resources from a WordNet dict directory.
    ExportLexicon {
        /// WordNet `dict` directory (index.noun, ...).
        #[arg(long)]
        wordnet: PathBuf,
        /// Raw norms CSV whose words need lemma entries.
        #[arg(long)]
        vocabulary: PathBuf,
        /// Two-column spelling TSV to include.
        #[arg(long)]
        spelling: Option<PathBuf>,
        #[arg(long)]
        output: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
