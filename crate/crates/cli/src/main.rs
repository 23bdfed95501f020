mod args;
mod jobs;
mod report;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use jobs::Failure;

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Count(a) => jobs::count(&a),
        Command::DirectSim(a) => jobs::direct_sim(&a),
        Command::Threshold(a) => jobs::threshold(&a),
        Command::Distill(a) => jobs::distill(&a),
        Command::AncBound(a) => jobs::anc_bound(&a),
        Command::Report(a) => report::report(&a),
        Command::Circuit(a) => jobs::circuit(&a),
    }
}

fn fail(f: Failure) -> ExitCode {
    eprintln!("{}", f.to_json());
    ExitCode::from(f.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(Failure::Validation(e.render().to_string().trim_end().to_string())),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => fail(f),
    }
}
