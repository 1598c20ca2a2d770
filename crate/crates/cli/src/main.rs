use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod decode;
mod rotate;
mod simulate;

#[derive(Parser)]
#[command(
    name = "wallfinder",
    version,
    about = "Wall-finding localization simulator and OI codec tools"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write trajectories, events and summaries.
    Simulate(simulate::Args),
    /// Decode hex bytes: a query-stream frame, a drive-direct command, a
    /// position report, or one packet's data with --packet.
    Decode(decode::Args),
    /// Rotate est_x/est_y columns of a trajectory CSV into the room frame.
    Rotate(rotate::Args),
}

/// A failed command: message for stderr and the process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => simulate::run(args),
        Command::Decode(args) => decode::run(args),
        Command::Rotate(args) => rotate::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
