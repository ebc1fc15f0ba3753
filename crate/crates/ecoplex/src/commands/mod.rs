mod bench;
mod cocluster;
mod ingest;
mod scores;
mod simulate;
mod verify;

pub use bench::run_bench;
pub use cocluster::run_cocluster;
pub use ingest::run_ingest;
pub use scores::run_scores;
pub use simulate::{run_greedy, run_sweep};
pub use verify::run_verify;

use crate::cli::{Cli, Command, SimulateMode};
use crate::config::RunConfig;
use crate::error::CliResult;
use crate::format::write_json;
use crate::io::ensure_dir;

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Ingest(args) => run_ingest(&args.resolve()?),
        Command::Scores(args) => run_scores(&args.resolve()?),
        Command::Cocluster(args) => run_cocluster(&args.resolve()?),
        Command::Simulate { mode: SimulateMode::Sweep(args) } => run_sweep(&args.resolve()?),
        Command::Simulate { mode: SimulateMode::Greedy(args) } => run_greedy(&args.resolve()?),
        Command::Verify(args) => run_verify(&args.resolve()?),
        Command::Bench(args) => run_bench(&args.resolve()?),
    }
}

/// Creates the output directory and records the effective configuration.
fn prepare(config: &RunConfig, command: &str) -> CliResult<()> {
    ensure_dir(&config.out)?;
    write_json(&config.out.join(format!("{command}.config.json")), config)
}
