use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use levy_epidemic::cli::{error_line, exit_code, reproduce_figures, run};
use levy_epidemic::Error;

#[derive(Parser)]
#[command(name = "levy-epidemic", version, about = "Jump-diffusion SIS/SIRS epidemic experiments")]
struct Cli {
    /// Override the master seed of the experiment.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Size of the worker pool for ensemble runs.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Simulate the six built-in panels and tabulate their verdicts.
    ReproduceFigures {
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
        if let Err(e) = pool {
            let err = Error::Config(format!("cannot start {n} worker threads: {e}"));
            eprintln!("{}", error_line(&err));
            return ExitCode::from(exit_code(&err) as u8);
        }
    }
    let result = match &cli.command {
        Command::Run { config, out } => run(config, out, cli.seed),
        Command::ReproduceFigures { out } => reproduce_figures(out, cli.seed).map(|_| ()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{}", error_line(&err));
            ExitCode::from(exit_code(&err) as u8)
        }
    }
}
