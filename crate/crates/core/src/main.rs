use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use mhdshock::cli::{cmd_background, cmd_init, cmd_solve, cmd_sweep, cmd_verify, Outcome, RunConfig};

#[derive(Parser)]
#[command(name = "mhdshock", version, about = "Transonic MHD shock solver for almost-flat nozzles")]
struct Cli {
    /// Run configuration (INI with dotted keys); defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Piecewise-constant background shock and its coefficients.
    Background,
    /// Admissible shock position and the linear downstream approximation.
    Init,
    /// Full nonlinear solve with diagnostics.
    Solve,
    /// Solve for several amplitudes and tabulate the scaling.
    Sweep {
        /// Comma-separated amplitudes.
        #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
        sigmas: Vec<f64>,
    },
    /// Background oracle and linearisation audit.
    Verify,
}

fn load(path: Option<&PathBuf>) -> anyhow::Result<RunConfig> {
    let cfg = match path {
        Some(p) => RunConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => RunConfig::default(),
    };
    Ok(cfg.with_env())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let cfg = match load(cli.config.as_ref()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    let out: Outcome = match cli.command {
        Command::Background => cmd_background(&cfg),
        Command::Init => cmd_init(&cfg),
        Command::Solve => cmd_solve(&cfg).0,
        Command::Sweep { sigmas } => cmd_sweep(&cfg, &sigmas).0,
        Command::Verify => cmd_verify(&cfg),
    };
    print!("{}", out.report.render());
    if let Some(err) = out.report.get("error") {
        eprintln!("error: {err}");
    }
    ExitCode::from(out.code as u8)
}
