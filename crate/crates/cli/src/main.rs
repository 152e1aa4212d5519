mod args;
mod commands;

use std::process::ExitCode;

use clap::{CommandFactory, Parser};

use args::{merge_with_file, Cli, Command};
use commands::Failure;

fn run(cli: &Cli) -> Result<(), Failure> {
    let file = cli.config.as_deref();
    let merged = |e: anyhow::Error| Failure::Usage(format!("{e:#}"));
    match &cli.command {
        Command::Track(a) => commands::track(&merge_with_file(a, file).map_err(merged)?),
        Command::Eval(a) => commands::eval(&merge_with_file(a, file).map_err(merged)?),
        Command::Synth(a) => commands::synth(&merge_with_file(a, file).map_err(merged)?),
        Command::InitWeights(a) => commands::init_weights(&merge_with_file(a, file).map_err(merged)?),
        Command::Bench(a) => commands::bench(&merge_with_file(a, file).map_err(merged)?),
    }
}

fn subcommand_name(command: &Command) -> &'static str {
    match command {
        Command::Track(_) => "track",
        Command::Eval(_) => "eval",
        Command::Synth(_) => "synth",
        Command::InitWeights(_) => "init-weights",
        Command::Bench(_) => "bench",
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            let mut cmd = Cli::command();
            cmd.build();
            let usage = cmd
                .find_subcommand_mut(subcommand_name(&cli.command))
                .map(|c| c.render_usage().to_string())
                .unwrap_or_default();
            eprintln!("error: {msg}\n\n{usage}\n\nFor more information, try '--help'.");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
