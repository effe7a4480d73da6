use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use msh2_cli::{cmd_analyze, cmd_simulate, cmd_sweep, cmd_synthesize, cmd_validate, CliError, Output, EXIT_INPUT};

#[derive(Parser)]
#[command(
    name = "msh2",
    version,
    about = "Mean-square H2 design over noisy delay and erasure channels"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Worker threads for Monte-Carlo runs (results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Write the result here instead of stdout (controller JSON for `synthesize`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Check the structural hypotheses; exits 0 iff all pass.
    Validate {
        problem: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Solve the design and report the optimal controller.
    Synthesize {
        problem: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Exact mean-square analysis as one CSV row.
    Analyze {
        problem: PathBuf,
        /// Controller JSON; the optimal design is used when omitted.
        #[arg(long)]
        controller: Option<PathBuf>,
    },
    /// Monte-Carlo estimate of the closed-loop power as one CSV row.
    Simulate {
        problem: PathBuf,
        #[arg(long)]
        controller: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Design, analyze and optionally simulate over the sweep grid.
    Sweep {
        problem: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| CliError {
        code: EXIT_INPUT,
        message: format!("{}: {e}", path.display()),
    })
}

fn run(cli: &Cli) -> Result<Output, CliError> {
    let controller = |path: &Option<PathBuf>| path.as_deref().map(read).transpose();
    match &cli.command {
        Command::Validate { problem, json } => cmd_validate(&read(problem)?, *json),
        Command::Synthesize { problem, json } => cmd_synthesize(&read(problem)?, *json),
        Command::Analyze { problem, controller: k } => cmd_analyze(&read(problem)?, controller(k)?.as_deref()),
        Command::Simulate {
            problem,
            controller: k,
            seed,
        } => cmd_simulate(&read(problem)?, controller(k)?.as_deref(), *seed),
        Command::Sweep { problem, seed } => cmd_sweep(&read(problem)?, *seed),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("msh2: --threads: {e}");
            return ExitCode::from(EXIT_INPUT as u8);
        }
    }
    let out = match run(&cli) {
        Ok(out) => out,
        Err(e) => {
            eprintln!("msh2: {e}");
            return ExitCode::from(e.code as u8);
        }
    };
    for note in &out.notes {
        eprintln!("msh2: {note}");
    }
    let is_synthesize = matches!(cli.command, Command::Synthesize { .. });
    match &cli.out {
        Some(path) => {
            let body = if is_synthesize {
                out.artifact.as_deref().unwrap_or(&out.text)
            } else {
                &out.text
            };
            if let Err(e) = std::fs::write(path, body) {
                eprintln!("msh2: {}: {e}", path.display());
                return ExitCode::from(EXIT_INPUT as u8);
            }
            if is_synthesize {
                print!("{}", out.text);
            }
        }
        None => print!("{}", out.text),
    }
    ExitCode::from(out.code as u8)
}
