//! `shp`: simulate, fit, and discover causal structure in binned event
//! sequences under the structural Hawkes model.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use shp_core::ErrorClass;

#[derive(Parser)]
#[command(
    name = "shp",
    version,
    about = "Causal discovery for binned event sequences via structural Hawkes processes",
    max_term_width = 100
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Root seed; overrides any seed given in a config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory where artifacts are written (created if missing).
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Worker threads for parallel sections (default: all cores). Results
    /// do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Which artifact formats to write.
    #[arg(long, global = true, value_enum, default_value_t = Format::Both)]
    format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
    Both,
}

impl Format {
    fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }

    fn json(self) -> bool {
        matches!(self, Format::Json | Format::Both)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Sample a ground-truth model and generate event data from it.
    Simulate(commands::SimulateArgs),
    /// Fit model parameters on a fixed graph.
    Fit(commands::FitArgs),
    /// Learn a graph from counts by penalized hill-climbing (or
    /// thresholding).
    Search(commands::SearchArgs),
    /// Score an estimated graph against a ground-truth graph.
    Evaluate(commands::EvaluateArgs),
    /// Run a metric sweep over simulated scenarios.
    Experiment(commands::ExperimentArgs),
    /// Probe when edge directions are recoverable on two-node data.
    Identifiability(commands::IdentifiabilityArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: could not configure {threads} threads: {e}");
            return ExitCode::from(2);
        }
    }
    let globals = commands::Globals {
        seed: cli.seed,
        out: cli.out,
        csv: cli.format.csv(),
        json: cli.format.json(),
    };
    let result = match cli.command {
        Command::Simulate(args) => commands::simulate(args, &globals),
        Command::Fit(args) => commands::fit(args, &globals),
        Command::Search(args) => commands::search(args, &globals),
        Command::Evaluate(args) => commands::evaluate(args, &globals),
        Command::Experiment(args) => commands::experiment(args, &globals),
        Command::Identifiability(args) => commands::identifiability(args, &globals),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.class() {
                ErrorClass::Validation => 2,
                ErrorClass::Io => 3,
                ErrorClass::Numeric => 4,
            })
        }
    }
}
