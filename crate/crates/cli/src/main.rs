use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ratchet_lab::acceptance::run_suite;
use ratchet_lab::{run_experiment, run_sweep_command, CliError, LoadedConfig, Overrides, RunOutcome};

#[derive(Parser)]
#[command(name = "ratchet-lab", version, about = "Randomly flashing ratchet experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the model named in a config file.
    Run(RunArgs),
    /// Solve on the sigma x kappa lattice and emit the first satisfying pair.
    Sweep(RunArgs),
    /// Run the acceptance suite.
    Selftest {
        /// Restrict to these criterion numbers.
        #[arg(long, value_delimiter = ',')]
        only: Vec<usize>,
    },
}

#[derive(Args)]
struct RunArgs {
    config: PathBuf,
    /// Grid node count.
    #[arg(long)]
    grid_n: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

impl RunArgs {
    fn load(&self) -> Result<LoadedConfig, CliError> {
        let mut cfg = LoadedConfig::load(&self.config)?;
        cfg.apply(&Overrides {
            grid_n: self.grid_n,
            output_dir: self.out.clone(),
            seed: self.seed,
        });
        cfg.validate()?;
        Ok(cfg)
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var("RATCHET_LAB_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|n| *n > 0)
    {
        // Fails only if a pool already exists, which cannot happen this early.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn print(outcome: &RunOutcome) {
    print!("{}", outcome.summary.render());
    for f in &outcome.files {
        println!("wrote {}", f.display());
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(args) => print(&run_experiment(&args.load()?)?),
        Command::Sweep(args) => print(&run_sweep_command(&args.load()?)?),
        Command::Selftest { only } => {
            let outcomes = run_suite(&only, |o| println!("{}", o.line()));
            let failed = outcomes.iter().filter(|o| !o.pass).count();
            println!("{} of {} criteria passed", outcomes.len() - failed, outcomes.len());
            if failed > 0 {
                return Err(CliError::Acceptance {
                    failed,
                    total: outcomes.len(),
                });
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
