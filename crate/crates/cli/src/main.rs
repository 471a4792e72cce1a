mod args;
mod run;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Symnmf(a) => run::symnmf(a),
        Command::Edmc(a) => run::edmc(a),
        Command::HelixGen(a) => run::helix_gen(a),
        Command::Simgraph(a) => run::simgraph(a),
        Command::Bench(a) => run::bench(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
