//! Command-line front end for `fgest-core`.

pub mod args;
pub mod bench;
pub mod commands;
pub mod error;
pub mod png;

use std::io::Write;

use args::{Cli, Command};
pub use error::{CliError, Result};

pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Estimate(a) => commands::estimate(a, out),
        Command::Compose(a) => commands::compose_cmd(a, out),
        Command::Metrics(a) => commands::metrics_cmd(a, out),
        Command::PrepDataset(a) => commands::prep_dataset(a, out),
        Command::Bench(a) => bench::bench(a, out),
    }
}
