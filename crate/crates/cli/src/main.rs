mod args;
mod commands;
mod config;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use commands::{Exit, Failure, Outcome};

fn run(cli: &Cli) -> Result<Outcome, Failure> {
    match &cli.command {
        Command::Classify(a) => commands::classify(a),
        Command::Construct(a) => commands::construct(a),
        Command::Verify(a) => commands::verify(a),
        Command::Basis(a) => commands::basis(a),
        Command::RecoverF(a) => commands::recover(a),
    }
}

fn common(cli: &Cli) -> &args::Common {
    match &cli.command {
        Command::Classify(a) => &a.common,
        Command::Construct(a) => &a.pair.common,
        Command::Verify(a) => &a.common,
        Command::Basis(a) => &a.common,
        Command::RecoverF(a) => &a.common,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("OBATA_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = run(&cli).and_then(|out| {
        commands::write(common(&cli), &out.body)?;
        Ok(out)
    });
    let exit = match result {
        Ok(out) => {
            if let Some(note) = &out.note {
                if out.exit == Exit::Pass {
                    log::info!("{note}");
                } else {
                    eprintln!("obata: {note}");
                }
            }
            out.exit
        }
        Err(f) => {
            eprintln!("obata: {}", f.message);
            f.exit
        }
    };
    ExitCode::from(exit as u8)
}
