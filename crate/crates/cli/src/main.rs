//! `moa`: command-line front end for the multiple oracle solver.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use multioracle::equilibrium::MasterSolver;
use multioracle::oracle::OracleMode;
use multioracle::Execution;

mod metric;
mod reproduce;
mod solve;

#[derive(Parser)]
#[command(name = "moa", version, about = "Approximate equilibria of continuous games by the multiple oracle algorithm")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one game and report the approximate equilibrium.
    Solve(SolveArgs),
    /// Distances between two finitely supported measures.
    Metric(MetricArgs),
    /// Run a batch of reference or random games.
    Reproduce(ReproduceArgs),
    /// Print a built-in example as a game file.
    Export(ExportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum MasterArg {
    Auto,
    Lp,
    PolymatrixLp,
    Regret,
}

impl From<MasterArg> for MasterSolver {
    fn from(m: MasterArg) -> Self {
        match m {
            MasterArg::Auto => MasterSolver::Auto,
            MasterArg::Lp => MasterSolver::Lp,
            MasterArg::PolymatrixLp => MasterSolver::PolymatrixLp,
            MasterArg::Regret => MasterSolver::Regret,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleArg {
    Auto,
    PolyExact,
    Multistart,
}

impl From<OracleArg> for OracleMode {
    fn from(o: OracleArg) -> Self {
        match o {
            OracleArg::Auto => OracleMode::Auto,
            OracleArg::PolyExact => OracleMode::PolyExact,
            OracleArg::Multistart => OracleMode::Multistart,
        }
    }
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct GameSource {
    /// Game definition file (TOML).
    #[arg(long, value_name = "PATH")]
    game: Option<PathBuf>,
    /// Built-in example game, 1 to 5.
    #[arg(long, value_name = "N")]
    example: Option<usize>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    source: GameSource,
    #[arg(long, default_value_t = 1e-3, allow_negative_numbers = true)]
    epsilon: f64,
    #[arg(long, default_value_t = 100)]
    max_iter: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "auto")]
    master: MasterArg,
    #[arg(long, value_enum, default_value = "auto")]
    oracle: OracleArg,
    /// Write the per-iteration trace as CSV.
    #[arg(long, value_name = "PATH")]
    trace: Option<PathBuf>,
    /// Record the Wasserstein distance between consecutive iterates.
    #[arg(long)]
    wasserstein: bool,
    /// Print the summary as JSON.
    #[arg(long)]
    json: bool,
    /// Run on one thread.
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct MetricArgs {
    /// Strategy space: `box:LO:HI` (comma-separated bounds for several
    /// dimensions), `simplex:D`, `circle`, `circle:euclidean` or `finite:N`.
    #[arg(long, allow_hyphen_values = true)]
    space: String,
    /// First measure, `x:w;x:w;...` with comma-separated coordinates, or `@FILE`.
    #[arg(long, allow_hyphen_values = true)]
    p: String,
    /// Second measure, same format.
    #[arg(long, allow_hyphen_values = true)]
    q: String,
    /// Also print an optimal transport plan.
    #[arg(long)]
    plan: bool,
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Examples,
    Polymatrix,
    Polynomial,
}

#[derive(Args)]
struct ReproduceArgs {
    #[arg(long, value_enum)]
    suite: Suite,
    /// Number of random games (ignored by the examples suite).
    #[arg(long, default_value_t = 10)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Players in each random game.
    #[arg(long, default_value_t = 3)]
    players: usize,
    /// Write the batch report as JSON.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Print the batch report as JSON instead of a table.
    #[arg(long)]
    json: bool,
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long, value_name = "N")]
    example: usize,
}

fn execution(sequential: bool) -> Execution {
    if sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match cli.command {
        Command::Solve(args) => solve::run(args),
        Command::Metric(args) => metric::run(args),
        Command::Reproduce(args) => reproduce::run(args),
        Command::Export(args) => multioracle::catalog::example_game(args.example)
            .and_then(|g| multioracle::gamefile::to_toml(&g))
            .map(|text| {
                print!("{text}");
                ExitCode::SUCCESS
            }),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
