mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use commands::{Failure, RunConfig, RunContext};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = RunConfig::load(cli.config.as_deref()).and_then(|config| {
        let ctx = RunContext {
            config,
            timing: !cli.no_timing,
        };
        match cli.command {
            Command::Gen(a) => commands::gen(a, &ctx),
            Command::Map(a) => commands::map(a, &ctx),
            Command::Detect(a) => commands::detect(a, &ctx),
            Command::Eval(a) => commands::eval(a, &ctx),
            Command::Bench(a) => commands::bench(a, &ctx),
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
