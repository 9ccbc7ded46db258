use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use hjbpi::{load_config, run_experiment, Mode};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    Solve,
    Pi,
    HStudy,
    TauStudy,
    LegendrePi,
    Probes,
}

impl From<Command> for Mode {
    fn from(c: Command) -> Mode {
        match c {
            Command::Solve => Mode::Solve,
            Command::Pi => Mode::Pi,
            Command::HStudy => Mode::HStudy,
            Command::TauStudy => Mode::TauStudy,
            Command::LegendrePi => Mode::LegendrePi,
            Command::Probes => Mode::Probes,
        }
    }
}

/// Monotone HJB schemes and policy iteration experiments.
#[derive(Debug, Parser)]
#[command(version)]
struct Cli {
    /// Mode to run; overrides `mode` in the config.
    command: Command,
    #[arg(long)]
    config: PathBuf,
    /// Overrides `output_dir`.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Overrides `threads`.
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides `seed`.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut config = match load_config(&cli.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let mode = Mode::from(cli.command);
    if mode != config.mode {
        // defaults depend on the mode; resolve again
        config.mode = mode;
        config.scheme.tau = None;
        config.scheme.viscosity = None;
        config = match config.resolve() {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        };
    }
    if let Some(dir) = cli.output {
        config.output_dir = dir;
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(k) = cli.threads {
        config.threads = Some(k);
    }
    if let Some(k) = config.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
        {
            eprintln!("error: cannot start {k} threads: {e}");
            return ExitCode::from(2);
        }
    }
    match run_experiment(&config) {
        Ok(summary) => {
            print!("{}", summary.render());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
