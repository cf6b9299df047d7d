//! `ancnet`: curve reproduction, circuit compilation, routing and schedule
//! simulation for ancilla-gated cellular networks.
//!
//! Exit codes: 0 success, 1 other failure, 2 parse error, 3 routing error,
//! 4 schedule invariant violation.

mod commands;
mod grid;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{CliError, CompileArgs, DutyArgs, Fig2Args, Fig3Args, RouteArgs, SimulateArgs};

#[derive(Parser, Debug)]
#[command(name = "ancnet", version, about = "Ancilla-gated quantum cellular network tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Occupation product of the three-site model along `s` or the detuning.
    Fig2(Fig2Args),
    /// Final purity against the inverse time ratio.
    Fig3(Fig3Args),
    /// Compile a circuit to a validated pulse schedule.
    Compile(CompileArgs),
    /// Replay a schedule and sample its readouts.
    Simulate(SimulateArgs),
    /// Swap-chain route between two sites, or lattice routing statistics.
    Route(RouteArgs),
    /// Duty-ratio report of a schedule.
    Duty(DutyArgs),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("ANCNET_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Fig2(a) => commands::fig2(a),
        Command::Fig3(a) => commands::fig3(a),
        Command::Compile(a) => commands::compile(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Route(a) => commands::route(a),
        Command::Duty(a) => commands::duty(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(CliError::exit_code(&e))
        }
    }
}
