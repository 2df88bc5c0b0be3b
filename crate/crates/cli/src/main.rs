//! `projnav`: mesh generation, scheme runs, convergence studies,
//! interpolation checks and energy audits.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 unreadable or
//! invalid data, 3 solver failure or failed check. Every run prints one
//! JSON summary line (stdout on success, stderr on failure).

mod commands;
mod config;
mod error;
mod vtk;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use config::{Overrides, RunConfig};
use error::CliError;

#[derive(Parser, Debug)]
#[command(name = "projnav", version, about = "Incremental projection scheme with Taylor-Hood elements")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Subdivisions of the structured mesh.
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Number of time steps.
    #[arg(long, global = true)]
    steps: Option<usize>,
    /// Relative tolerance of both linear solvers.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Write VTK files of every state.
    #[arg(long, global = true)]
    emit_fields: bool,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Build a mesh and write it with its statistics.
    Mesh,
    /// Run the scheme and write per-step diagnostics.
    Run,
    /// Manufactured-solution refinement study.
    Mms,
    /// Check the edge bubbles and the divergence-correcting interpolant.
    InterpVerify,
    /// Per-step energy balance residuals.
    EnergyAudit,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Mesh => "mesh",
            Command::Run => "run",
            Command::Mms => "mms",
            Command::InterpVerify => "interp-verify",
            Command::EnergyAudit => "energy-audit",
        }
    }

    fn default_refinements(self) -> &'static [usize] {
        match self {
            Command::InterpVerify => &[2, 4, 8],
            _ => &[8, 16, 32],
        }
    }
}

fn execute(cli: &Cli) -> Result<serde_json::Value, CliError> {
    let overrides =
        Overrides { n: cli.n, steps: cli.steps, tol: cli.tol, out: cli.out.clone(), emit_fields: cli.emit_fields };
    let refinements = cli.command.default_refinements();
    let cfg = match &cli.config {
        Some(path) => RunConfig::from_file(path, &overrides, refinements)?,
        None => RunConfig::from_text("", &overrides, refinements)?,
    };
    match cli.command {
        Command::Mesh => commands::cmd_mesh(&cfg),
        Command::Run => commands::cmd_run(&cfg),
        Command::Mms => commands::cmd_mms(&cfg),
        Command::InterpVerify => commands::cmd_interp_verify(&cfg),
        Command::EnergyAudit => commands::cmd_energy_audit(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::Usage(e.to_string().trim().to_string());
            eprintln!("{}", err.summary(""));
            return ExitCode::from(err.exit_code() as u8);
        }
    };
    let name = cli.command.name();
    match execute(&cli) {
        Ok(mut summary) => {
            let mut record = json!({ "status": "ok", "command": name });
            if let Some(obj) = summary.as_object_mut() {
                record.as_object_mut().expect("object").append(obj);
            }
            println!("{record}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.summary(name));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
