use std::path::PathBuf;
use std::process::ExitCode;

use calabi_cli::{run_command, Command};
use clap::{Args, Parser, Subcommand};

/// Modified Calabi flow and stability diagnostics on toric surfaces.
#[derive(Parser)]
#[command(name = "calabi", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the modified Calabi flow.
    Flow(Common),
    /// Curvature, functionals and stability report for the configured potential.
    Diagnose(Common),
    /// Solve for the extremal affine function.
    Theta(Common),
    /// Crease search, M-condition and diameter summary.
    Stability(Common),
    /// Sampled M-condition estimate.
    Mcond(Common),
    /// Straight-ray diameter estimate.
    Diameter(Common),
    /// Check the polygon.
    Validate(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: `output` from the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Cmd::Flow(a) => (Command::Flow, a),
        Cmd::Diagnose(a) => (Command::Diagnose, a),
        Cmd::Theta(a) => (Command::Theta, a),
        Cmd::Stability(a) => (Command::Stability, a),
        Cmd::Mcond(a) => (Command::Mcond, a),
        Cmd::Diameter(a) => (Command::Diameter, a),
        Cmd::Validate(a) => (Command::Validate, a),
    };
    let outcome = run_command(command, &args.config, args.out, args.seed);
    if outcome.exit_code == 0 {
        eprintln!("{}: ok", command.name());
    } else {
        eprintln!("{}: {} ({})", command.name(), outcome.condition, outcome.message);
    }
    ExitCode::from(outcome.exit_code as u8)
}
