use std::process::ExitCode;

use clap::Parser;
use sufcast::config::{Cli, Command, RunConfig};
use sufcast::run::execute;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cfg, emit) = match &cli.command {
        Command::Simulate(a) => (RunConfig::from_simulate(a), a.emit_panel.clone()),
        Command::Forecast(a) => (RunConfig::from_data("forecast", a), None),
        Command::Factors(a) => (RunConfig::from_data("factors", a), None),
    };
    match execute(&cfg, emit.as_deref()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("sufcast: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
