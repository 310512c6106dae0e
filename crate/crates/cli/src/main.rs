//! Command-line front end: dataset generation, training, standalone fixing,
//! evaluation and PDDL export.

mod eval;
mod fix;
mod generate;
mod io;
mod train;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

const EXIT_CODES: &str = "\
Exit codes:
  0  success
  1  runtime error (bad input files, invalid configuration, dead ends, I/O)
  2  usage error (unknown or missing flags)
  3  fix: the solver returned no assignment (infeasible or out of time)";

#[derive(Parser)]
#[command(name = "liftlearn", version, about, after_help = EXIT_CODES)]
struct Cli {
    /// More log output (-v info, -vv debug); RUST_LOG overrides.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample random-walk traces and render them through the noisy channel.
    Generate(generate::GenerateArgs),
    /// Train the predictors on the training split.
    Train(train::TrainArgs),
    /// Solve a fix problem file.
    Fix(fix::FixArgs),
    /// Score a checkpoint or model dump against the reference model.
    Eval(eval::EvalArgs),
    /// Print a learned (or the reference) model as a PDDL domain.
    ExportPddl(eval::ExportArgs),
}

/// Domain and instance files.
#[derive(Args, Debug, Clone)]
struct World {
    /// PDDL domain file; its action definitions serve as the reference model.
    #[arg(long)]
    domain: PathBuf,
    /// PDDL problem file naming the objects.
    #[arg(long)]
    instance: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match cli.command {
        Command::Generate(a) => generate::run(a),
        Command::Train(a) => train::run(a),
        Command::Fix(a) => fix::run(a),
        Command::Eval(a) => eval::run(a),
        Command::ExportPddl(a) => eval::export(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
