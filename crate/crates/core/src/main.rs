use std::io;
use std::process::ExitCode;

use clap::Parser;
use manet_routes::cli::{execute, Cli, CliConfig};

fn main() -> ExitCode {
    let config = CliConfig::from(Cli::parse());
    let code = execute(&config, &mut io::stdout().lock(), &mut io::stderr().lock());
    ExitCode::from(code as u8)
}
