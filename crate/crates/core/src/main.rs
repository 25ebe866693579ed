//! `vbsim`: spin-defect ESR spectrum simulation and fitting toolkit.
//!
//! Exit codes: 0 success, 2 configuration or input parse failure,
//! 3 numerical failure, 4 I/O failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use vbsim::commands::{
    cmd_fit_esr, cmd_fit_trace, cmd_optics_sweep, cmd_simulate_esr, cmd_t1_model, CommandReport,
};
use vbsim::config::RunConfig;
use vbsim::error::{ErrorClass, Result};

#[derive(Parser)]
#[command(
    name = "vbsim",
    version,
    about = "Simulate and fit optically-detected ESR spectra of hBN spin defects"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a charge-bath-averaged ESR spectrum.
    SimulateEsr {
        /// TOML run configuration.
        #[arg(long)]
        config: PathBuf,
        /// Output spectrum table (CSV); a manifest lands next to it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit charge density and contrast to a measured spectrum.
    FitEsr {
        #[arg(long)]
        config: PathBuf,
        /// Measured spectrum table (CSV with frequency_mhz, normalized_pl).
        #[arg(long)]
        measured: PathBuf,
        /// Output report path; overlay and manifest land next to it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Sweep a layer thickness and tabulate mean optical absorption.
    OpticsSweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit an exponential rise or decay to a time trace.
    FitTrace {
        #[arg(long)]
        config: PathBuf,
        /// Trace table (CSV with time_us, signal).
        #[arg(long)]
        trace: PathBuf,
        /// Transient model: rise or decay.
        #[arg(long)]
        mode: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Split a relaxation time into phonon and residual channels.
    T1Model {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<CommandReport> {
    match cli.command {
        Command::SimulateEsr { config, out } => {
            cmd_simulate_esr(&RunConfig::load(&config)?, &out)
        }
        Command::FitEsr { config, measured, out } => {
            cmd_fit_esr(&RunConfig::load(&config)?, &measured, &out)
        }
        Command::OpticsSweep { config, out } => {
            cmd_optics_sweep(&RunConfig::load(&config)?, &out)
        }
        Command::FitTrace { config, trace, mode, out } => {
            cmd_fit_trace(&RunConfig::load(&config)?, &trace, &mode, &out)
        }
        Command::T1Model { config, out } => cmd_t1_model(&RunConfig::load(&config)?, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(report) => {
            println!("{}", report.summary);
            for file in &report.files {
                println!("wrote {}", file.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e.class() {
                ErrorClass::Input => ExitCode::from(2),
                ErrorClass::Numerical => ExitCode::from(3),
                ErrorClass::Io => ExitCode::from(4),
            }
        }
    }
}
