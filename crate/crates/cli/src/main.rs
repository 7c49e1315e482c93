use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

mod bench;
mod output;
mod solve;
mod verify;

/// Exit codes shared by all commands.
pub mod exit {
    pub const OK: u8 = 0;
    pub const IO: u8 = 1;
    pub const CONFIG: u8 = 2;
    pub const INFEASIBLE: u8 = 3;
    pub const NOT_CONVERGED: u8 = 4;
    pub const VERIFY_FAILED: u8 = 5;
}

#[derive(Parser, Debug)]
#[command(name = "dqseco", version, about = "6-DoF powered-descent guidance by sequential conic optimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve one mission and write the trajectory and report.
    Solve {
        config: PathBuf,
        /// Override the node count.
        #[arg(long)]
        nodes: Option<usize>,
        /// Output directory (created if missing).
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Override the RNG seed used by spectral estimation.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Time repeated solves.
    Bench {
        config: PathBuf,
        #[arg(long, default_value_t = 10)]
        reps: usize,
        /// Comma-separated node counts, e.g. 10,15,20,25.
        #[arg(long, value_delimiter = ',')]
        sweep: Option<Vec<usize>>,
        /// Start each repetition from the previous converged trajectory.
        #[arg(long)]
        warm: bool,
        /// CSV output path.
        #[arg(long, default_value = "bench.csv")]
        out: PathBuf,
    },
    /// Run the oracle and finite-difference self-checks.
    Verify {
        config: PathBuf,
        #[arg(long)]
        quick: bool,
        /// Corrupt solve-path results to confirm the checks can fail.
        #[arg(long)]
        inject_fault: bool,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("SECO_LOG", "warn")).init();
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Solve { config, nodes, out, seed } => solve::run(&config, nodes, &out, seed),
        Command::Bench { config, reps, sweep, warm, out } => bench::run(&config, reps, sweep, warm, &out),
        Command::Verify { config, quick, inject_fault } => verify::run(&config, quick, inject_fault),
    };
    ExitCode::from(code)
}
