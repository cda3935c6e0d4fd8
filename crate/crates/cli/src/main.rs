use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gifs_cli::commands::{
    cmd_attractor, cmd_check, cmd_diagnose, cmd_pi, cmd_project, cmd_render, AttractorArgs,
    CheckArgs, DiagnoseArgs, PiArgs, ProjectArgs, RenderArgs,
};

/// Attractors and canonical projections of generalized iterated function systems.
#[derive(Parser)]
#[command(name = "gifs", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Approximate the attractor and write it as point CSV
    Attractor(AttractorArgs),
    /// Evaluate the canonical projection at one address
    Project(ProjectArgs),
    /// Tabulate the projection iterate at a fixed depth
    Pi(PiArgs),
    /// Sampled contraction diagnostics
    Diagnose(DiagnoseArgs),
    /// Check the identities satisfied by the projection and the attractor
    Check(CheckArgs),
    /// Render point CSV as a PPM image
    Render(RenderArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Attractor(a) => cmd_attractor(a),
        Command::Project(a) => cmd_project(a),
        Command::Pi(a) => cmd_pi(a),
        Command::Diagnose(a) => cmd_diagnose(a),
        Command::Check(a) => cmd_check(a),
        Command::Render(a) => cmd_render(a),
    };
    match result {
        Ok(out) => {
            let _ = std::io::stdout().write_all(out.stdout.as_bytes());
            let _ = std::io::stderr().write_all(out.stderr.as_bytes());
            ExitCode::from(out.outcome().exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
