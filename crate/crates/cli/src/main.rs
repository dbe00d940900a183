use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sorption_cli::commands::{cmd_converge, cmd_run, cmd_validate, Options};
use sorption_core::checks::CheckOptions;

#[derive(Parser)]
#[command(name = "sorption", version, about = "Implicit variational solver for degenerate sorption/diffusion systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output directory (overrides the config file)
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Only report errors
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation from a config file
    Run { config: PathBuf },
    /// Run a ZKB mesh-refinement study and fit convergence rates
    Converge { config: PathBuf },
    /// Run the built-in identity checks
    Validate {
        #[arg(long, hide = true, default_value_t = 0.0)]
        perturb_gradient: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let opts = Options {
        out: cli.out,
        quiet: cli.quiet,
    };
    let result = match cli.command {
        Command::Run { config } => cmd_run(&config, &opts).map(drop),
        Command::Converge { config } => cmd_converge(&config, &opts).map(drop),
        Command::Validate { perturb_gradient } => cmd_validate(
            &opts,
            &CheckOptions {
                gradient_perturbation: perturb_gradient,
                ..CheckOptions::default()
            },
        )
        .map(drop),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
