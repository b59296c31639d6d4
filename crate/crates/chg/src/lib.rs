//! Configuration, file formats and subcommands for running and checking
//! Cahn-Hilliard-Gurtin simulations built on `chg-core`.
//!
//! Exit codes: 0 success, 2 validator rejection, 3 solver or I/O failure,
//! 4 configuration or usage error.

pub mod builtins;
pub mod commands;
pub mod config;
pub mod output;

pub use commands::{
    cmd_check, cmd_extend, cmd_simulate, cmd_sweep, cmd_symbol_scan, CliError, Options,
};
pub use config::{parse_config, ConfigError, ConfigErrors, RunConfig};

/// Reads and parses a config file; read failures are usage errors.
pub fn load_config(path: &std::path::Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    Ok(parse_config(&text)?)
}
