//! `spflow`: batch front end for the sign-changing Schrodinger-Poisson solver.

mod config;
mod run;
mod verify;

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use spflow_core::io::{read_dump, write_vtk};

#[derive(Parser)]
#[command(name = "spflow", version, about = "Sign-changing bound states of the Schrodinger-Poisson system")]
struct Cli {
    /// Print progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Minimax solve for lambda = 0, continuation otherwise.
    Solve { config: PathBuf },
    /// Run the operator and cone check battery.
    Verify { config: PathBuf },
    /// Convert a field dump to legacy VTK.
    ExportVtk { field: PathBuf, out: PathBuf },
    /// Continuation in lambda down to the unperturbed problem.
    Continuation { config: PathBuf },
}

/// How a command failed; each maps to one exit code.
pub enum Failure {
    Config(anyhow::Error),
    Solver(anyhow::Error),
    NoSolution(String),
    Verification,
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Solver(_) | Failure::NoSolution(_) => 2,
            Failure::Verification => 3,
        }
    }
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("SPFLOW_THREADS") {
        let n: usize = v.trim().parse().with_context(|| format!("SPFLOW_THREADS must be a positive integer, got {v:?}"))?;
        anyhow::ensure!(n > 0, "SPFLOW_THREADS must be positive");
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn export_vtk(field: &Path, out: &Path) -> anyhow::Result<()> {
    let input = File::open(field).with_context(|| format!("cannot read {}", field.display()))?;
    let f = read_dump::<f64>(BufReader::new(input)).with_context(|| format!("bad field dump {}", field.display()))?;
    let mut w = BufWriter::new(File::create(out).with_context(|| format!("cannot write {}", out.display()))?);
    write_vtk(&f, "u", &mut w)?;
    w.flush()?;
    Ok(())
}

fn verify(path: &Path) -> Result<(), Failure> {
    let loaded = config::load(path).map_err(Failure::Config)?;
    let checks = verify::battery(&loaded).map_err(Failure::Config)?;
    println!("{:<40} {:>12} {:>12}  result", "check", "value", "limit");
    for c in &checks {
        println!("{:<40} {:>12.3e} {:>12.3e}  {}", c.name, c.value, c.limit, if c.passed { "PASS" } else { "FAIL" });
    }
    if checks.iter().all(|c| c.passed) {
        Ok(())
    } else {
        Err(Failure::Verification)
    }
}

fn dispatch(cli: &Cli) -> Result<(), Failure> {
    configure_threads().map_err(Failure::Config)?;
    match &cli.command {
        Command::Solve { config } | Command::Continuation { config } => {
            let loaded = config::load(config).map_err(Failure::Config)?;
            let manifest = if matches!(cli.command, Command::Solve { .. }) {
                run::solve(&loaded)?
            } else {
                run::continuation(&loaded)?
            };
            if cli.verbose {
                eprintln!("manifest: {}", manifest.display());
            }
            println!("{}", manifest.display());
            Ok(())
        }
        Command::Verify { config } => verify(config),
        Command::ExportVtk { field, out } => export_vtk(field, out).map_err(Failure::Config),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Config(e) | Failure::Solver(e) => eprintln!("error: {e:#}"),
                Failure::NoSolution(m) => eprintln!("no solution: {m}"),
                Failure::Verification => eprintln!("verification failed"),
            }
            ExitCode::from(f.code())
        }
    }
}
