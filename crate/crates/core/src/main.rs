use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use stress_elast::cli::{run_command, Command, RunConfig};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cmd {
    Solve,
    Convergence,
    Spectrum,
    PsiSweep,
    Identities,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Solve => Command::Solve,
            Cmd::Convergence => Command::Convergence,
            Cmd::Spectrum => Command::Spectrum,
            Cmd::PsiSweep => Command::PsiSweep,
            Cmd::Identities => Command::Identities,
        }
    }
}

/// Stress-based finite-element solver and verification harness for linear elasticity.
#[derive(Debug, Parser)]
#[command(name = "stress-elast", version)]
struct Args {
    /// Command to run.
    #[arg(value_enum)]
    command: Cmd,
    /// Run configuration (`key = value` lines).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides `out` in the configuration).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let cfg = match &args.config {
        Some(path) => RunConfig::load(path),
        None => Ok(RunConfig::default()),
    };
    let result = cfg.and_then(|mut cfg| {
        if let Some(out) = args.out {
            cfg.out = out;
        }
        run_command(args.command.into(), &cfg)
    });
    match result {
        Ok(output) => {
            for line in &output.lines {
                println!("{line}");
            }
            for file in &output.files {
                println!("wrote {}", file.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("stress-elast: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
