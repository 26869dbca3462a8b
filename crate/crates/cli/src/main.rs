//! `affint`: counts linear first integrals of 2D affine connections and
//! Hamiltonian structures of hydrodynamic-type systems.

mod commands;
mod problem;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("i/o: {0}")]
    Io(String),
    #[error("parse: {0}")]
    Parse(String),
    #[error(transparent)]
    Core(#[from] affint_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use affint_core::Error as E;
        match self {
            CliError::Core(E::Precondition(_) | E::NotStrictlyHyperbolic | E::LinearlyDegenerate(_)) => 2,
            _ => 1,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "affint", version, about = "Linear first integrals of 2D affine connections")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: GlobalOpts,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalOpts {
    /// Emit JSON; `--json false` prints a plain-text table instead.
    #[arg(long, global = true, default_value_t = true, action = ArgAction::Set)]
    pub json: bool,
    /// Seed for sample points and random base points (overrides the file).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Working precision in bits for zero-testing.
    #[arg(long, global = true, env = "AFFINT_PRECISION")]
    pub precision: Option<u32>,
    /// Write the report here as well as to stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct NumericOpts {
    #[arg(long)]
    pub tau_end: Option<f64>,
    #[arg(long)]
    pub step: Option<f64>,
    /// Larger loop radius; the second radius is half of it.
    #[arg(long)]
    pub loop_radius: Option<f64>,
    #[arg(long)]
    pub ansatz_degree: Option<u32>,
    /// Trajectory dump with header `tau,x1,x2,v1,v2,kappa`.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Count linear first integrals of a connection.
    ClassifyConnection { file: PathBuf },
    /// Count Hamiltonian structures of a hydrodynamic-type system.
    ClassifyHydro { file: PathBuf },
    /// Dump the full obstruction tower.
    Invariants { file: PathBuf },
    /// Run the built-in example suite.
    Corpus {
        #[arg(long, conflicts_with = "id", required_unless_present = "id")]
        all: bool,
        #[arg(long)]
        id: Option<String>,
    },
    /// Cross-check a classification against the floating-point oracles.
    NumericVerify {
        file: PathBuf,
        #[command(flatten)]
        numeric: NumericOpts,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::ClassifyConnection { file } => commands::classify_connection(&file, &cli.global),
        Command::ClassifyHydro { file } => commands::classify_hydro(&file, &cli.global),
        Command::Invariants { file } => commands::invariants(&file, &cli.global),
        Command::Corpus { all: _, id } => commands::run_corpus(id.as_deref(), &cli.global),
        Command::NumericVerify { file, numeric } => commands::numeric_verify(&file, &cli.global, &numeric),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            let report = serde_json::json!({ "error": err.to_string(), "exit_code": err.exit_code() });
            println!("{}", serde_json::to_string_pretty(&report).expect("json"));
            ExitCode::from(err.exit_code())
        }
    }
}
