use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use chg::{load_config, CliError, Options};

#[derive(Parser)]
#[command(
    name = "chg",
    version,
    about = "Cahn-Hilliard-Gurtin simulation and verification toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Configuration file.
    config: PathBuf,
    /// Output directory (overrides `output.dir`).
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Noise seed (overrides `output.seed`).
    #[arg(long)]
    seed: Option<u64>,
    /// Write a snapshot every N steps (overrides `output.snapshot_every`).
    #[arg(long, value_name = "N")]
    snapshot_every: Option<usize>,
    /// Suppress the console report.
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Validate the data and run the time stepper.
    Simulate(Common),
    /// Report ellipticity, structure and potential certificates.
    Check(Common),
    /// Scan the constant-coefficient symbol on a sector.
    SymbolScan(Common),
    /// Extend a ball field to the whole space and certify it.
    Extend(Common),
    /// Run one simulation per parameter value.
    Sweep(Common),
}

fn run(command: Command) -> Result<(), CliError> {
    let (common, which) = match command {
        Command::Simulate(c) => (c, 0),
        Command::Check(c) => (c, 1),
        Command::SymbolScan(c) => (c, 2),
        Command::Extend(c) => (c, 3),
        Command::Sweep(c) => (c, 4),
    };
    let config = load_config(&common.config)?;
    let opts = Options {
        out_dir: common.out_dir,
        seed: common.seed,
        snapshot_every: common.snapshot_every,
        quiet: common.quiet,
    };
    match which {
        0 => chg::cmd_simulate(&config, &opts).map(drop),
        1 => chg::cmd_check(&config, &opts).map(drop),
        2 => chg::cmd_symbol_scan(&config, &opts).map(drop),
        3 => chg::cmd_extend(&config, &opts).map(drop),
        _ => chg::cmd_sweep(&config, &opts).map(drop),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 4 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("chg: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
