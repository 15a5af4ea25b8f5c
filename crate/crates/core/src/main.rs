use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cavres::commands::{self, Command};
use cavres::config::RunConfig;

#[derive(Parser)]
#[command(
    name = "cavres",
    version,
    about = "Resonance poles and cavity rate suppression for a 1D reaction path"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Prepare the uniform, padded reaction curve.
    Ingest(Args),
    /// Find, classify and tabulate resonance poles.
    Resonances(Args),
    /// Single-molecule and ensemble coupling sweeps.
    Polariton(Args),
    /// Compare scaled-grid poles with transfer-matrix poles.
    Oracle(Args),
    /// Every stage in order.
    All(Args),
}

#[derive(clap::Args)]
struct Args {
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides [output] dir).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Cmd::Ingest(a) => (Command::Ingest, a),
        Cmd::Resonances(a) => (Command::Resonances, a),
        Cmd::Polariton(a) => (Command::Polariton, a),
        Cmd::Oracle(a) => (Command::Oracle, a),
        Cmd::All(a) => (Command::All, a),
    };
    let result = RunConfig::load(&args.config).and_then(|cfg| {
        let dir = commands::output_dir(&cfg, args.out.as_deref());
        commands::run(&cfg, command, &dir)
    });
    match result {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
