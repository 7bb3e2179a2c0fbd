use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use critles_cli::verify::{format_table, run_suite, Suite};
use critles_cli::{cmd_run, cmd_sweep, CliError, Options, Status};

#[derive(Parser)]
#[command(
    name = "critles",
    version,
    about = "Filtered Navier-Stokes / MHD solver on the 3-torus"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Worker threads (per run for `run`/`verify`, concurrent members for `sweep`)
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Overrides the configured output directory
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,

    /// Overrides the seed of random initial data / fixtures
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation from a config or a previous run's manifest
    Run { config: PathBuf },
    /// Run a built-in property suite and print a pass/fail table
    Verify {
        #[arg(value_enum)]
        suite: Suite,
    },
    /// Run an alpha sweep against the alpha = 0 reference
    Sweep { config: PathBuf },
}

fn fail(e: CliError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code())
}

fn status_code(status: Status) -> ExitCode {
    match status {
        Status::Completed => ExitCode::SUCCESS,
        Status::BlowUp | Status::Failed => ExitCode::from(3),
        Status::Partial => ExitCode::from(4),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let opts = Options {
        workers: cli.workers,
        output_dir: cli.output_dir,
        seed: cli.seed,
    };
    if matches!(cli.command, Command::Run { .. } | Command::Verify { .. }) {
        if let Some(n) = opts.workers {
            if let Err(e) = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build_global()
            {
                eprintln!("error: thread pool: {e}");
                return ExitCode::FAILURE;
            }
        }
    }
    match cli.command {
        Command::Run { config } => match cmd_run(&config, &opts) {
            Ok(m) => {
                let dir = m.config.output.directory.display();
                match &m.message {
                    Some(msg) => eprintln!("run {:?}: {msg}", m.status),
                    None => println!(
                        "completed {} steps to t = {} in {:.2} s; output in {dir}",
                        m.steps_completed, m.final_time, m.wall_seconds
                    ),
                }
                status_code(m.status)
            }
            Err(e) => fail(e),
        },
        Command::Sweep { config } => match cmd_sweep(&config, &opts) {
            Ok(m) => {
                print!("{}", critles_cli::commands::sweep_report(&m));
                if let Some(msg) = &m.message {
                    eprintln!("sweep {:?}: {msg}", m.status);
                }
                println!("output in {}", m.config.output.directory.display());
                status_code(m.status)
            }
            Err(e) => fail(e),
        },
        Command::Verify { suite } => match run_suite(suite, opts.seed.unwrap_or(0)) {
            Ok(checks) => {
                print!("{}", format_table(suite, &checks));
                if checks.iter().all(|c| c.pass) {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::FAILURE
                }
            }
            Err(e) => fail(e),
        },
    }
}
